#pragma once

#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace fblearn {

// Evaluation at (or numerically near) a pole of the denominator.
struct PoleError : std::domain_error {
    using std::domain_error::domain_error;
};

// Rational function of one complex variable with real coefficients in
// ascending powers of s. Coefficient arithmetic is exact: no approximate
// pole-zero cancellation, only exact common monomial factors of s are
// removed, so low-order coefficient counting (dc_gain) stays meaningful.
class RationalTF {
public:
    RationalTF() : num_{0.0}, den_{1.0} {}
    RationalTF(std::vector<double> num, std::vector<double> den);

    static RationalTF constant(double k) { return RationalTF({k}, {1.0}); }
    static RationalTF integrator(double k) { return RationalTF({k}, {0.0, 1.0}); }

    const std::vector<double>& num() const { return num_; }
    const std::vector<double>& den() const { return den_; }

    bool zero() const { return num_.size() == 1 && num_[0] == 0.0; }

    // Horner evaluation of num(s)/den(s). Throws PoleError when
    // |den(s)| < 1e-12 * max|den coefficient|.
    std::complex<double> evaluate(std::complex<double> s) const;

    // s -> 0 limit: ratio of the lowest-order nonzero coefficients when the
    // orders match, 0 when the numerator's order is higher, and nullopt
    // (signaled divergence) when the denominator's is higher.
    std::optional<double> dc_gain() const;

private:
    std::vector<double> num_;
    std::vector<double> den_;
};

enum class TfArith { add, mul, div };

// Exact coefficient arithmetic. Division by the zero transfer function
// throws std::invalid_argument.
RationalTF tf_arith(const RationalTF& a, const RationalTF& b, TfArith kind);

inline RationalTF operator+(const RationalTF& a, const RationalTF& b) {
    return tf_arith(a, b, TfArith::add);
}
inline RationalTF operator*(const RationalTF& a, const RationalTF& b) {
    return tf_arith(a, b, TfArith::mul);
}
inline RationalTF operator/(const RationalTF& a, const RationalTF& b) {
    return tf_arith(a, b, TfArith::div);
}

// Closed-loop map from the expected representation to the learned one:
//   H = (T1*T2)/(1 + T1*T2) * (1 + 1/T2)
// composed exactly in the printed product form.
RationalTF holistic_closed_loop(const RationalTF& t_phi1, const RationalTF& t_phi);

struct IdentityGapRow {
    double omega = 0.0;
    // Distances |T1(i*omega) - 1| and |H(i*omega) - 1|; nullopt marks a
    // pole hit at this frequency.
    std::optional<double> open_loop_gap;
    std::optional<double> closed_loop_gap;
};

// Per-frequency deviation from the identity map for the open-loop training
// block vs the closed-loop composition.
std::vector<IdentityGapRow> identity_gap(const RationalTF& t_phi1, const RationalTF& t_phi,
                                         std::span<const double> freqs);

// Header: omega,open_loop_gap,closed_loop_gap  (pole rows print nan)
void write_identity_gap_csv(std::ostream& os, std::span<const IdentityGapRow> rows);

// Logarithmic omega grid over [1e-3, 1e3], 61 points.
std::vector<double> default_frequency_grid();

}  // namespace fblearn
