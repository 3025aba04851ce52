#include "grucap/gradcheck.hpp"

#include <cmath>

namespace grucap {

double relative_error(double a, double b, double floor) {
    const double denom = std::max(floor, std::max(std::fabs(a), std::fabs(b)));
    return std::fabs(a - b) / denom;
}

GradCheck::Result GradCheck::run(const std::vector<std::pair<std::string, Tensor>>& params,
                                 const std::function<double()>& loss_value,
                                 const std::function<void()>& backward_pass) const {
    for (auto& [name, p] : params) {
        const_cast<Tensor&>(p).zero_grad();
    }
    backward_pass();

    Result res;
    for (auto& [name, p] : params) {
        Tensor t = p;
        const std::vector<double> analytic = t.grad();
        for (std::size_t i = 0; i < t.numel(); ++i) {
            const double saved = t.data()[i];
            t.data()[i] = saved + step;
            const double f_plus = loss_value();
            t.data()[i] = saved - step;
            const double f_minus = loss_value();
            t.data()[i] = saved;
            const double fd = (f_plus - f_minus) / (2.0 * step);
            const double rel = relative_error(analytic[i], fd, denom_floor);
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_block = name;
                res.worst_index = i;
            }
        }
        t.zero_grad();
    }
    return res;
}

}  // namespace grucap
