#include "fblearn/transfer_function.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "fblearn/io_util.hpp"

namespace fblearn {

namespace {

// Drop exact trailing (highest-order) zeros; canonical zero polynomial is {0}.
void trim(std::vector<double>& p) {
    while (p.size() > 1 && p.back() == 0.0) p.pop_back();
    if (p.empty()) p.push_back(0.0);
}

bool is_zero_poly(const std::vector<double>& p) {
    return p.size() == 1 && p[0] == 0.0;
}

std::vector<double> poly_add(const std::vector<double>& a, const std::vector<double>& b) {
    std::vector<double> out(std::max(a.size(), b.size()), 0.0);
    for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
    for (std::size_t i = 0; i < b.size(); ++i) out[i] += b[i];
    trim(out);
    return out;
}

std::vector<double> poly_mul(const std::vector<double>& a, const std::vector<double>& b) {
    if (is_zero_poly(a) || is_zero_poly(b)) return {0.0};
    std::vector<double> out(a.size() + b.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
    trim(out);
    return out;
}

std::complex<double> horner(const std::vector<double>& p, std::complex<double> s) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t i = p.size(); i-- > 0;) acc = acc * s + p[i];
    return acc;
}

std::size_t lowest_nonzero_order(const std::vector<double>& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (p[i] != 0.0) return i;
    return p.size();  // zero polynomial
}

}  // namespace

RationalTF::RationalTF(std::vector<double> num, std::vector<double> den)
    : num_(std::move(num)), den_(std::move(den)) {
    if (num_.empty()) num_.push_back(0.0);
    if (den_.empty()) throw std::invalid_argument("RationalTF: empty denominator");
    trim(num_);
    trim(den_);
    for (double c : num_)
        if (!std::isfinite(c)) throw std::invalid_argument("RationalTF: non-finite coefficient");
    for (double c : den_)
        if (!std::isfinite(c)) throw std::invalid_argument("RationalTF: non-finite coefficient");
    if (is_zero_poly(den_))
        throw std::invalid_argument("RationalTF: denominator is the zero polynomial");

    // Cancel the common monomial factor s^k (exact symbolic zeros only).
    if (!is_zero_poly(num_)) {
        const std::size_t k = std::min(lowest_nonzero_order(num_), lowest_nonzero_order(den_));
        if (k > 0) {
            num_.erase(num_.begin(), num_.begin() + static_cast<std::ptrdiff_t>(k));
            den_.erase(den_.begin(), den_.begin() + static_cast<std::ptrdiff_t>(k));
        }
    }
}

std::complex<double> RationalTF::evaluate(std::complex<double> s) const {
    double max_coeff = 0.0;
    for (double c : den_) max_coeff = std::max(max_coeff, std::abs(c));
    const std::complex<double> d = horner(den_, s);
    if (std::abs(d) < 1e-12 * max_coeff)
        throw PoleError("RationalTF: evaluation at a pole");
    return horner(num_, s) / d;
}

std::optional<double> RationalTF::dc_gain() const {
    if (zero()) return 0.0;
    const std::size_t ln = lowest_nonzero_order(num_);
    const std::size_t ld = lowest_nonzero_order(den_);
    if (ln == ld) return num_[ln] / den_[ld];
    if (ln > ld) return 0.0;
    return std::nullopt;  // denominator vanishes faster: divergent
}

RationalTF tf_arith(const RationalTF& a, const RationalTF& b, TfArith kind) {
    switch (kind) {
        case TfArith::add:
            return RationalTF(poly_add(poly_mul(a.num(), b.den()), poly_mul(b.num(), a.den())),
                              poly_mul(a.den(), b.den()));
        case TfArith::mul:
            return RationalTF(poly_mul(a.num(), b.num()), poly_mul(a.den(), b.den()));
        case TfArith::div:
            if (b.zero())
                throw std::invalid_argument("tf_arith: division by the zero transfer function");
            return RationalTF(poly_mul(a.num(), b.den()), poly_mul(a.den(), b.num()));
    }
    throw std::logic_error("tf_arith: unknown kind");
}

RationalTF holistic_closed_loop(const RationalTF& t_phi1, const RationalTF& t_phi) {
    const RationalTF one = RationalTF::constant(1.0);
    const RationalTF loop = t_phi1 * t_phi;
    return loop / (one + loop) * (one + one / t_phi);
}

std::vector<IdentityGapRow> identity_gap(const RationalTF& t_phi1, const RationalTF& t_phi,
                                         std::span<const double> freqs) {
    const RationalTF h = holistic_closed_loop(t_phi1, t_phi);
    std::vector<IdentityGapRow> rows;
    rows.reserve(freqs.size());
    for (double omega : freqs) {
        IdentityGapRow row;
        row.omega = omega;
        const std::complex<double> s(0.0, omega);
        try {
            row.open_loop_gap = std::abs(t_phi1.evaluate(s) - 1.0);
        } catch (const PoleError&) {
        }
        try {
            row.closed_loop_gap = std::abs(h.evaluate(s) - 1.0);
        } catch (const PoleError&) {
        }
        rows.push_back(row);
    }
    return rows;
}

void write_identity_gap_csv(std::ostream& os, std::span<const IdentityGapRow> rows) {
    os << "omega,open_loop_gap,closed_loop_gap\n";
    for (const auto& r : rows) {
        os << format_double(r.omega) << ','
           << (r.open_loop_gap ? format_double(*r.open_loop_gap) : "nan") << ','
           << (r.closed_loop_gap ? format_double(*r.closed_loop_gap) : "nan") << '\n';
    }
}

std::vector<double> default_frequency_grid() {
    std::vector<double> freqs;
    const int points = 61;
    for (int i = 0; i < points; ++i) {
        const double exponent = -3.0 + 6.0 * i / (points - 1);
        freqs.push_back(std::pow(10.0, exponent));
    }
    return freqs;
}

}  // namespace fblearn
