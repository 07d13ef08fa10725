#pragma once
// Central finite-difference oracle for gradient tests. Independent of the
// tape: it only perturbs leaf values and re-evaluates the given function.
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "vspt/tensor.hpp"

namespace gradcheck {

struct Result {
    double max_rel_err = 0.0;
    double max_abs_err = 0.0;
    std::string worst; // "param#k[i]"
};

// fn must rebuild the graph from the current leaf values and return the
// scalar loss. Leaves must have requires_grad=true.
inline Result check(const std::function<vspt::Tensor()>& fn, std::vector<vspt::Tensor> leaves,
                    double h = 1e-5) {
    // analytic pass
    for (auto& p : leaves) p.zero_grad();
    std::vector<std::vector<double>> analytic;
    {
        vspt::Tape tape;
        vspt::Tensor loss = fn();
        tape.backward(loss);
    }
    for (auto& p : leaves) {
        if (p.has_grad())
            analytic.push_back(p.grad_values());
        else
            analytic.push_back(std::vector<double>(size_t(p.numel()), 0.0));
    }

    Result res;
    for (size_t k = 0; k < leaves.size(); ++k) {
        vspt::Tensor& p = leaves[k];
        for (int64_t i = 0; i < p.numel(); ++i) {
            double saved = p.data()[i];
            p.data()[i] = saved + h;
            double fp = fn().item();
            p.data()[i] = saved - h;
            double fm = fn().item();
            p.data()[i] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            double a = analytic[k][size_t(i)];
            double abs_err = std::fabs(a - numeric);
            double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-8});
            double rel = abs_err / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst = "param#" + std::to_string(k) + "[" + std::to_string(i) + "]";
            }
            res.max_abs_err = std::max(res.max_abs_err, abs_err);
        }
    }
    return res;
}

} // namespace gradcheck
