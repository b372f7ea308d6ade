#ifndef TVDYN_GAMMA_HPP
#define TVDYN_GAMMA_HPP

#include "common.hpp"

#include <boost/math/special_functions/digamma.hpp>

#include <cmath>

namespace tvdyn {

/// Array of independent Gamma(shape, rate) distributions.
struct GammaArray {
    Vector shape;
    Vector rate;

    GammaArray() = default;
    GammaArray(Index n, double a, double b) : shape(Vector::Constant(n, a)), rate(Vector::Constant(n, b)) {}

    Index size() const { return shape.size(); }
    Vector mean() const { return shape.cwiseQuotient(rate); }
    Vector log_mean() const {
        Vector out(size());
        for (Index i = 0; i < size(); ++i) out[i] = boost::math::digamma(shape[i]) - std::log(rate[i]);
        return out;
    }
};

/// KL(Gamma(a_q, b_q) || Gamma(a_p, b_p)), shape/rate parameterization.
inline double gamma_kl(double a_q, double b_q, double a_p, double b_p) {
    return (a_q - a_p) * boost::math::digamma(a_q) - std::lgamma(a_q) + std::lgamma(a_p) +
           a_p * (std::log(b_q) - std::log(b_p)) + a_q * (b_p - b_q) / b_q;
}

inline double gamma_kl(const GammaArray& q, double a_p, double b_p) {
    double kl = 0.0;
    for (Index i = 0; i < q.size(); ++i) kl += gamma_kl(q.shape[i], q.rate[i], a_p, b_p);
    return kl;
}

}  // namespace tvdyn

#endif  // TVDYN_GAMMA_HPP
