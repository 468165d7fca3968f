#include "dbncls/strategies.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "dbncls/oracle.hpp"
#include "dbncls/stream_tags.hpp"

namespace dbncls {

std::string_view to_string(StrategyId s) {
    switch (s) {
        case StrategyId::dbn_ffn: return "DBN-FFN";
        case StrategyId::dbn_plus_loss: return "DBN+loss";
        case StrategyId::el_dbn: return "EL-DBN";
        case StrategyId::el_dbnopt: return "EL-DBNOPT";
        case StrategyId::ffn_dbn: return "FFN-DBN";
        case StrategyId::ffn_dbnopt: return "FFN-DBNOPT";
        case StrategyId::bl: return "BL";
    }
    return "?";
}

StrategyId strategy_from_string(std::string_view name) {
    if (name == "DBN-FFN") return StrategyId::dbn_ffn;
    if (name == "DBN+loss") return StrategyId::dbn_plus_loss;
    if (name == "EL-DBN") return StrategyId::el_dbn;
    if (name == "EL-DBNOPT") return StrategyId::el_dbnopt;
    if (name == "FFN-DBN") return StrategyId::ffn_dbn;
    if (name == "FFN-DBNOPT") return StrategyId::ffn_dbnopt;
    if (name == "BL") return StrategyId::bl;
    throw_error(ErrorCategory::config, "bad_strategy",
                "unknown strategy '" + std::string(name) + "'");
}

namespace {

// Bounds ref +- radius, tightened to the nearest representable values whose
// distance from ref is <= radius in floating point, so the feasibility
// check |theta - ref| <= radius holds exactly after projection.
double upper_bound(double ref, double radius) {
    double hi = ref + radius;
    while (std::isfinite(hi) && hi - ref > radius) hi = std::nextafter(hi, ref);
    return hi;
}

double lower_bound(double ref, double radius) {
    double lo = ref - radius;
    while (std::isfinite(lo) && ref - lo > radius) lo = std::nextafter(lo, ref);
    return lo;
}

} // namespace

std::vector<double> box_project(std::span<const double> theta, const BoxConstraint& box) {
    if (theta.size() != box.reference.size())
        throw_error(ErrorCategory::dimension, "box_shape",
                    "box_project: parameter and reference lengths differ");
    std::vector<double> out(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) {
        double lo = lower_bound(box.reference[i], box.radius);
        double hi = upper_bound(box.reference[i], box.radius);
        out[i] = std::min(std::max(theta[i], lo), hi);
    }
    return out;
}

namespace {

void box_project_inplace(DbnParams& dbn, const BoxConstraint& box) {
    std::size_t k = 0;
    auto clamp_range = [&](std::vector<double>& v) {
        for (double& t : v) {
            double lo = lower_bound(box.reference[k], box.radius);
            double hi = upper_bound(box.reference[k], box.radius);
            t = std::min(std::max(t, lo), hi);
            ++k;
        }
    };
    for (RbmParams& layer : dbn.layers) {
        clamp_range(layer.W.data());
        clamp_range(layer.b);
        clamp_range(layer.c);
    }
    if (k != box.reference.size())
        throw_error(ErrorCategory::dimension, "box_shape",
                    "box reference length does not match stack");
}

double box_activity(const DbnParams& dbn, const BoxConstraint& box) {
    std::vector<double> theta = flatten(dbn);
    double mx = 0.0;
    for (std::size_t i = 0; i < theta.size(); ++i)
        mx = std::max(mx, std::abs(theta[i] - box.reference[i]));
    return mx;
}

double loss_from_logits(std::span<const double> z, int y) {
    double mx = z[0];
    for (double v : z)
        if (v > mx) mx = v;
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    return std::log(sum) - (z[y] - mx);
}

// Mean supervised loss and gradient over the indexed batch.
double supervised_batch(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& data,
                        std::span<const std::size_t> idx, NetGrad& g) {
    double total = 0.0;
    double w = 1.0 / static_cast<double>(idx.size());
    for (std::size_t i : idx) total += backward(dbn, cls, data.input(i), data.labels[i], g, w);
    return total / static_cast<double>(idx.size());
}

// Expected loss of one example; accumulates weight * gradient. Returns the
// value (exact in enumerate mode, the sample mean in MC mode).
double el_example(const DbnParams& dbn, const ClassifierParams& cls, std::span<const double> x,
                  int y, ElMode mode, int mc_samples, RngStream stream, NetGrad& accum,
                  double weight) {
    if (y < 0 || static_cast<std::size_t>(y) >= cls.num_classes())
        throw_error(ErrorCategory::dimension, "bad_label", "class index out of range");
    Activations acts = propagate(dbn, x);
    const std::vector<double>& mu = acts.top();
    const std::size_t T = mu.size();
    const std::size_t C = cls.num_classes();

    double value = 0.0;
    std::vector<double> dmu(T, 0.0);

    if (mode == ElMode::enumerate) {
        if (T > 20)
            throw_error(ErrorCategory::guard, "el_enum_guard",
                        "expected-loss enumeration limited to 2^20 top states");
        std::vector<double> h(T);
        for (std::uint64_t hb = 0; hb < (1ULL << T); ++hb) {
            double w = 1.0;
            for (std::size_t i = 0; i < T; ++i) {
                h[i] = (hb >> i) & 1ULL ? 1.0 : 0.0;
                w *= h[i] == 1.0 ? mu[i] : 1.0 - mu[i];
            }
            std::vector<double> z = logits(cls, h);
            std::vector<double> p = softmax(z);
            value += w * loss_from_logits(z, y);
            for (std::size_t k = 0; k < C; ++k) {
                double dz = p[k] - (static_cast<int>(k) == y ? 1.0 : 0.0);
                auto du = accum.dU.row(k);
                for (std::size_t j = 0; j < T; ++j) du[j] += weight * w * dz * h[j];
                accum.dd[k] += weight * w * dz;
            }
        }
        // d E[L] / d mu_i = E[L | h_i=1] - E[L | h_i=0], summed over the
        // remaining coordinates with the i-th Bernoulli factor removed.
        for (std::size_t i = 0; i < T; ++i) {
            for (std::uint64_t hb = 0; hb < (1ULL << T); ++hb) {
                if ((hb >> i) & 1ULL) continue;
                double w = 1.0;
                for (std::size_t kk = 0; kk < T; ++kk) {
                    if (kk == i) continue;
                    double hv = (hb >> kk) & 1ULL ? 1.0 : 0.0;
                    w *= hv == 1.0 ? mu[kk] : 1.0 - mu[kk];
                }
                std::vector<double> h0(T);
                for (std::size_t kk = 0; kk < T; ++kk) h0[kk] = (hb >> kk) & 1ULL ? 1.0 : 0.0;
                std::vector<double> z0 = logits(cls, h0);
                std::vector<double> z1 = z0;
                for (std::size_t k = 0; k < C; ++k) z1[k] += cls.U(k, i);
                dmu[i] += w * (loss_from_logits(z1, y) - loss_from_logits(z0, y));
            }
        }
    } else {
        double inv_s = 1.0 / static_cast<double>(mc_samples);
        std::vector<double> h(T);
        for (int s = 0; s < mc_samples; ++s) {
            for (std::size_t i = 0; i < T; ++i) h[i] = stream.bernoulli(mu[i]) ? 1.0 : 0.0;
            std::vector<double> z = logits(cls, h);
            std::vector<double> p = softmax(z);
            value += inv_s * loss_from_logits(z, y);
            for (std::size_t k = 0; k < C; ++k) {
                double dz = p[k] - (static_cast<int>(k) == y ? 1.0 : 0.0);
                auto du = accum.dU.row(k);
                for (std::size_t j = 0; j < T; ++j) du[j] += weight * inv_s * dz * h[j];
                accum.dd[k] += weight * inv_s * dz;
            }
            // Paired estimate of the two-point difference: flip h_i both
            // ways while the other coordinates keep the sampled values.
            std::vector<double> z1(C), z0(C);
            for (std::size_t i = 0; i < T; ++i) {
                for (std::size_t k = 0; k < C; ++k) {
                    z1[k] = z[k] + (1.0 - h[i]) * cls.U(k, i);
                    z0[k] = z[k] - h[i] * cls.U(k, i);
                }
                dmu[i] += inv_s * (loss_from_logits(z1, y) - loss_from_logits(z0, y));
            }
        }
    }

    backprop_top_gradient(dbn, acts, x, dmu, accum, weight);
    return value;
}

double el_batch(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& data,
                std::span<const std::size_t> idx, ElMode mode, int mc_samples,
                const RngStream& stream, NetGrad& g) {
    double total = 0.0;
    double w = 1.0 / static_cast<double>(idx.size());
    for (std::size_t pos = 0; pos < idx.size(); ++pos) {
        std::size_t i = idx[pos];
        total += el_example(dbn, cls, data.input(i), data.labels[i], mode, mc_samples,
                            stream.derive(pos), g, w);
    }
    return total / static_cast<double>(idx.size());
}

std::vector<std::vector<double>> gather_inputs(const Dataset& data,
                                               std::span<const std::size_t> idx) {
    std::vector<std::vector<double>> out;
    out.reserve(idx.size());
    for (std::size_t i : idx) {
        auto r = data.input(i);
        out.emplace_back(r.begin(), r.end());
    }
    return out;
}

// Layer-i inputs for the generative terms: the data for layer 0, the
// propagated means below layer i otherwise.
std::vector<std::vector<double>> layer_inputs(const DbnParams& dbn, const Dataset& data,
                                              std::span<const std::size_t> idx,
                                              std::size_t layer) {
    std::vector<std::vector<double>> out = gather_inputs(data, idx);
    for (std::size_t k = 0; k < layer; ++k)
        for (auto& v : out) v = prob_h_given_x(dbn.layers[k], v);
    return out;
}

RbmGrad hessian_times(const Matrix& H, const RbmGrad& g, const RbmParams& shape) {
    std::vector<double> flat = flatten(g);
    std::vector<double> prod = matvec(H, flat);
    RbmGrad out = RbmGrad::zeros_like(shape);
    std::size_t k = 0;
    for (double& v : out.dW.data()) v = prod[k++];
    for (double& v : out.db) v = prod[k++];
    for (double& v : out.dc) v = prod[k++];
    return out;
}

double squared_norm(const RbmGrad& g) {
    double acc = 0.0;
    for (double v : g.dW.data()) acc += v * v;
    for (double v : g.db) acc += v * v;
    for (double v : g.dc) acc += v * v;
    return acc;
}

// Adds mu * H_i g_i for every layer; returns sum of ||g_i||^2.
double add_bl_penalty(NetGrad& accum, const DbnParams& dbn, const Dataset& data,
                      std::span<const std::size_t> idx, double mu, HvpMode mode, int cd_k,
                      const RngStream& grad_stream, const RngStream& hvp_stream) {
    double norm_sum = 0.0;
    for (std::size_t layer = 0; layer < dbn.depth(); ++layer) {
        const RbmParams& p = dbn.layers[layer];
        std::vector<std::vector<double>> inputs = layer_inputs(dbn, data, idx, layer);

        if (mode == HvpMode::exact) {
            RbmGrad g_bar = RbmGrad::zeros_like(p);
            double w = 1.0 / static_cast<double>(inputs.size());
            Matrix h_bar(p.W.size() + p.b.size() + p.c.size(),
                         p.W.size() + p.b.size() + p.c.size());
            for (const auto& v : inputs) {
                g_bar.add_scaled(exact_nll_grad(p, v), w);
                Matrix h = exact_rbm_hessian(p, v);
                for (std::size_t a = 0; a < h.data().size(); ++a) h_bar.data()[a] += w * h.data()[a];
            }
            norm_sum += squared_norm(g_bar);
            RbmGrad hg = hessian_times(h_bar, g_bar, p);
            accum.layers[layer].add_scaled(hg, mu);
        } else {
            RngStream sg = grad_stream.derive(layer);
            RbmGrad g_hat = cd_k_grad(p, inputs, cd_k, sg);
            norm_sum += squared_norm(g_hat);
            std::vector<double> dir = flatten(g_hat);
            double dir_inf = max_abs(dir);
            if (dir_inf == 0.0) continue;
            std::vector<double> theta = flatten(p);
            double eps = 1e-3 * (1.0 + max_abs(theta)) / (1.0 + dir_inf);

            std::vector<double> up(theta.size()), down(theta.size());
            for (std::size_t i = 0; i < theta.size(); ++i) {
                up[i] = theta[i] + eps * dir[i];
                down[i] = theta[i] - eps * dir[i];
            }
            // Shared stream on both sides so the sampling noise cancels.
            RngStream sh = hvp_stream.derive(layer);
            RbmGrad g_up = cd_k_grad(unflatten_rbm(up, p.hidden(), p.visible()), inputs, cd_k, sh);
            RbmGrad g_down =
                cd_k_grad(unflatten_rbm(down, p.hidden(), p.visible()), inputs, cd_k, sh);
            g_up.add_scaled(g_down, -1.0);
            g_up.scale(1.0 / (2.0 * eps));
            accum.layers[layer].add_scaled(g_up, mu);
        }
    }
    return norm_sum;
}

// Sum of ||g_i||^2 without touching the accumulator (epoch bookkeeping).
double bl_penalty_norm(const DbnParams& dbn, const Dataset& data,
                       std::span<const std::size_t> idx, HvpMode mode, int cd_k,
                       const RngStream& stream) {
    double norm_sum = 0.0;
    for (std::size_t layer = 0; layer < dbn.depth(); ++layer) {
        const RbmParams& p = dbn.layers[layer];
        std::vector<std::vector<double>> inputs = layer_inputs(dbn, data, idx, layer);
        if (mode == HvpMode::exact) {
            RbmGrad g_bar = RbmGrad::zeros_like(p);
            double w = 1.0 / static_cast<double>(inputs.size());
            for (const auto& v : inputs) g_bar.add_scaled(exact_nll_grad(p, v), w);
            norm_sum += squared_norm(g_bar);
        } else {
            norm_sum += squared_norm(cd_k_grad(p, inputs, cd_k, stream.derive(layer)));
        }
    }
    return norm_sum;
}

void apply_update(DbnParams& dbn, ClassifierParams& cls, const NetGrad& g, double lr) {
    for (std::size_t k = 0; k < dbn.layers.size(); ++k) {
        RbmParams& layer = dbn.layers[k];
        const RbmGrad& lg = g.layers[k];
        for (std::size_t i = 0; i < layer.W.data().size(); ++i)
            layer.W.data()[i] -= lr * lg.dW.data()[i];
        for (std::size_t j = 0; j < layer.b.size(); ++j) layer.b[j] -= lr * lg.db[j];
        for (std::size_t i = 0; i < layer.c.size(); ++i) layer.c[i] -= lr * lg.dc[i];
    }
    for (std::size_t i = 0; i < cls.U.data().size(); ++i) cls.U.data()[i] -= lr * g.dU.data()[i];
    for (std::size_t i = 0; i < cls.d.size(); ++i) cls.d[i] -= lr * g.dd[i];
}

struct LoopCfg {
    bool use_el = false;
    Schedule rho{0.0, 0.0};
    Schedule mu{0.0, 0.0};
    std::optional<BoxConstraint> box;
};

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

double evaluate_objective(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& data,
                          const LoopCfg& cfg, const Hyper& hyper, const RngStream& eval_stream) {
    if (!cfg.use_el) return objective_two_phase(dbn, cls, data);
    // Exact value whenever the top layer is enumerable, MC otherwise.
    ElMode mode = dbn.top_size() <= 20 ? ElMode::enumerate : ElMode::monte_carlo;
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        NetGrad scratch = NetGrad::zeros_like(dbn, cls);
        total += el_example(dbn, cls, data.input(i), data.labels[i], mode, hyper.mc_samples,
                            eval_stream.derive(i), scratch, 0.0);
    }
    return total / static_cast<double>(data.size());
}

void finetune_loop(DbnParams& dbn, ClassifierParams& cls, const DataSplits& splits,
                   const Hyper& hyper, const LoopCfg& cfg, const RngStream& root,
                   RunHistory& hist, TwoPhaseSnapshot& best, const EpochObserver& observer) {
    const Dataset& train = splits.train;
    RngStream ft = root.derive(stream_tags::finetune);
    const bool boxed = cfg.box.has_value() && !std::isinf(cfg.box->radius);

    best = TwoPhaseSnapshot{dbn, cls};
    double best_err = error_rate(dbn, cls, splits.valid);

    for (int epoch = 0; epoch < hyper.finetune_epochs; ++epoch) {
        double rho_t = cfg.rho.at(epoch);
        double mu_t = cfg.mu.at(epoch);

        std::vector<std::size_t> order = all_indices(train.size());
        RngStream shuffle_stream = ft.derive(stream_tags::shuffle).derive(epoch);
        shuffle_stream.shuffle(order);

        std::size_t batch_no = 0;
        for (std::size_t start = 0; start < order.size();
             start += hyper.batch_size, ++batch_no) {
            std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(hyper.batch_size));
            std::span<const std::size_t> idx(order.data() + start, end - start);

            NetGrad g = NetGrad::zeros_like(dbn, cls);
            if (cfg.use_el) {
                ElMode mode = hyper.el_mode;
                if (mode == ElMode::enumerate && dbn.top_size() > 20)
                    throw_error(ErrorCategory::guard, "el_enum_guard",
                                "enumerate mode needs top layer <= 20 units");
                el_batch(dbn, cls, train, idx, mode, hyper.mc_samples,
                         ft.derive(stream_tags::el).derive(epoch).derive(batch_no), g);
            } else {
                supervised_batch(dbn, cls, train, idx, g);
            }
            if (rho_t > 0.0) {
                std::vector<std::vector<double>> inputs = gather_inputs(train, idx);
                RbmGrad cd = cd_k_grad(dbn.layers[0], inputs, hyper.cd_k,
                                       ft.derive(stream_tags::cd).derive(epoch).derive(batch_no));
                g.layers[0].add_scaled(cd, rho_t);
            }
            if (mu_t > 0.0) {
                add_bl_penalty(g, dbn, train, idx, mu_t, hyper.hvp_mode, hyper.cd_k,
                               ft.derive(stream_tags::bl_grad).derive(epoch).derive(batch_no),
                               ft.derive(stream_tags::bl_hvp).derive(epoch).derive(batch_no));
            }
            apply_update(dbn, cls, g, hyper.finetune_lr);
            if (boxed) box_project_inplace(dbn, *cfg.box);
        }

        EpochStats st;
        RngStream eval_stream = ft.derive(stream_tags::eval).derive(epoch);
        st.objective = evaluate_objective(dbn, cls, train, cfg, hyper, eval_stream);
        if (cfg.mu.initial > 0.0) {
            st.penalty = bl_penalty_norm(dbn, train, all_indices(train.size()), hyper.hvp_mode,
                                         hyper.cd_k, eval_stream.derive(stream_tags::bl_grad));
        } else if (cfg.rho.initial > 0.0) {
            st.penalty = rho_t * reconstruction_cross_entropy(dbn.layers[0], train.input_rows());
        } else if (cfg.box) {
            st.penalty = box_activity(dbn, *cfg.box);
        }
        st.train_error = error_rate(dbn, cls, train);
        st.valid_error = error_rate(dbn, cls, splits.valid);
        st.test_error = error_rate(dbn, cls, splits.test);
        hist.epochs.push_back(st);

        if (st.valid_error < best_err) {
            best_err = st.valid_error;
            best = TwoPhaseSnapshot{dbn, cls};
        }
        if (observer) observer(epoch, dbn, cls);
    }
}

void check_arch_matches(const DbnParams& d, std::span<const std::size_t> layer_sizes,
                        const char* what) {
    bool ok = d.depth() + 1 == layer_sizes.size();
    if (ok) {
        for (std::size_t k = 0; k < d.depth(); ++k)
            ok = ok && d.layers[k].visible() == layer_sizes[k] &&
                 d.layers[k].hidden() == layer_sizes[k + 1];
    }
    if (!ok)
        throw_error(ErrorCategory::dimension, "snapshot_arch",
                    std::string(what) + " does not match the requested architecture");
}

} // namespace

TrainedModel train(StrategyId strategy, const DataSplits& splits,
                   std::span<const std::size_t> layer_sizes, const Hyper& hyper,
                   const Prereqs& prereqs, const RngStream& root, const EpochObserver& observer) {
    hyper.validate();
    splits.train.check_consistent();
    splits.valid.check_consistent();
    splits.test.check_consistent();
    if (splits.train.size() == 0)
        throw_error(ErrorCategory::dimension, "empty_train", "training split is empty");
    if (layer_sizes.size() < 2 || splits.train.feature_count() != layer_sizes.front())
        throw_error(ErrorCategory::dimension, "arch_mismatch",
                    "architecture does not match the data dimension");

    const std::size_t classes = static_cast<std::size_t>(splits.train.num_classes);

    TrainedModel model;
    model.strategy = strategy;
    model.hyper = hyper;

    LoopCfg cfg;
    switch (strategy) {
        case StrategyId::dbn_ffn:
            if (!prereqs.pretrained)
                throw_error(ErrorCategory::prerequisite, "missing_pretrained",
                            "DBN-FFN fine-tuning needs the pretrained stack");
            model.dbn = *prereqs.pretrained;
            model.cls = init_classifier(classes, model.dbn.top_size());
            break;
        case StrategyId::dbn_plus_loss:
            model.dbn = init_dbn(layer_sizes, root);
            model.cls = init_classifier(classes, model.dbn.top_size());
            cfg.rho = hyper.rho;
            break;
        case StrategyId::el_dbn:
            if (!prereqs.pretrained)
                throw_error(ErrorCategory::prerequisite, "missing_pretrained",
                            "EL-DBN needs the pretrained stack");
            model.dbn = *prereqs.pretrained;
            model.cls = init_classifier(classes, model.dbn.top_size());
            cfg.use_el = true;
            cfg.box = BoxConstraint{flatten(*prereqs.pretrained), hyper.delta};
            break;
        case StrategyId::el_dbnopt:
            if (!prereqs.two_phase)
                throw_error(ErrorCategory::prerequisite, "missing_two_phase",
                            "EL-DBNOPT needs the finished two-phase solution");
            model.dbn = prereqs.two_phase->dbn;
            model.cls = prereqs.two_phase->cls;
            cfg.use_el = true;
            cfg.box = BoxConstraint{flatten(prereqs.two_phase->dbn), hyper.delta};
            break;
        case StrategyId::ffn_dbn:
            if (!prereqs.pretrained)
                throw_error(ErrorCategory::prerequisite, "missing_pretrained",
                            "FFN-DBN needs the pretrained stack");
            model.dbn = *prereqs.pretrained;
            model.cls = init_classifier(classes, model.dbn.top_size());
            cfg.box = BoxConstraint{flatten(*prereqs.pretrained), hyper.delta};
            break;
        case StrategyId::ffn_dbnopt:
            if (!prereqs.two_phase)
                throw_error(ErrorCategory::prerequisite, "missing_two_phase",
                            "FFN-DBNOPT needs the finished two-phase solution");
            model.dbn = prereqs.two_phase->dbn;
            model.cls = prereqs.two_phase->cls;
            cfg.box = BoxConstraint{flatten(prereqs.two_phase->dbn), hyper.delta};
            break;
        case StrategyId::bl:
            model.dbn = init_dbn(layer_sizes, root);
            model.cls = init_classifier(classes, model.dbn.top_size());
            cfg.mu = hyper.mu;
            break;
    }
    check_arch_matches(model.dbn, layer_sizes, "starting snapshot");
    if (model.cls.feature_size() != model.dbn.top_size() || model.cls.num_classes() != classes)
        throw_error(ErrorCategory::dimension, "snapshot_arch",
                    "classifier snapshot does not match the stack or class count");
    if (cfg.box) model.reference_digest = param_digest(model.dbn);

    finetune_loop(model.dbn, model.cls, splits, hyper, cfg, root, model.history, model.best_valid,
                  observer);
    return model;
}

double objective_two_phase(const DbnParams& dbn, const ClassifierParams& cls,
                           const Dataset& batch) {
    batch.check_consistent();
    if (batch.size() == 0)
        throw_error(ErrorCategory::dimension, "empty_batch", "objective over empty batch");
    double total = 0.0;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        Activations acts = propagate(dbn, batch.input(i));
        total += forward_loss(cls, acts.top(), batch.labels[i]);
    }
    return total / static_cast<double>(batch.size());
}

ValueGrad objective_dbn_plus_loss(const DbnParams& dbn, const ClassifierParams& cls,
                                  const Dataset& batch, double rho, int cd_k,
                                  const RngStream& rng) {
    if (rho < 0.0)
        throw_error(ErrorCategory::config, "bad_rho", "rho must be >= 0");
    ValueGrad out;
    out.grad = NetGrad::zeros_like(dbn, cls);
    std::vector<std::size_t> idx = all_indices(batch.size());
    out.value = supervised_batch(dbn, cls, batch, idx, out.grad);
    if (rho > 0.0) {
        double gen = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i)
            gen -= log_px_approx(dbn, batch.input(i));
        out.value += rho * gen / static_cast<double>(batch.size());
        std::vector<std::vector<double>> inputs = gather_inputs(batch, idx);
        RbmGrad cd = cd_k_grad(dbn.layers[0], inputs, cd_k, rng);
        out.grad.layers[0].add_scaled(cd, rho);
    }
    return out;
}

ValueGrad expected_loss(const DbnParams& dbn, const ClassifierParams& cls,
                        std::span<const double> x, int y, ElMode mode, int mc_samples,
                        const RngStream& rng) {
    ValueGrad out;
    out.grad = NetGrad::zeros_like(dbn, cls);
    out.value = el_example(dbn, cls, x, y, mode, mc_samples, rng, out.grad, 1.0);
    return out;
}

ValueGrad bl_penalty(const DbnParams& dbn, const ClassifierParams& cls, const Dataset& batch,
                     double mu, HvpMode mode, int cd_k, const RngStream& rng) {
    if (mu < 0.0)
        throw_error(ErrorCategory::config, "bad_mu", "mu must be >= 0");
    ValueGrad out;
    out.grad = NetGrad::zeros_like(dbn, cls);
    std::vector<std::size_t> idx = all_indices(batch.size());
    out.value = supervised_batch(dbn, cls, batch, idx, out.grad);
    if (mu > 0.0) {
        double norm_sum = add_bl_penalty(out.grad, dbn, batch, idx, mu, mode, cd_k,
                                         rng.derive(stream_tags::bl_grad),
                                         rng.derive(stream_tags::bl_hvp));
        out.value += 0.5 * mu * norm_sum;
    }
    return out;
}

namespace {

std::uint64_t fnv1a(std::uint64_t h, const std::vector<double>& v) {
    for (double d : v) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &d, sizeof(double));
        for (unsigned char b : bytes) {
            h ^= b;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

} // namespace

std::uint64_t param_digest(const DbnParams& dbn) {
    return fnv1a(0xcbf29ce484222325ULL, flatten(dbn));
}

std::uint64_t param_digest(const DbnParams& dbn, const ClassifierParams& cls) {
    std::uint64_t h = fnv1a(0xcbf29ce484222325ULL, flatten(dbn));
    h = fnv1a(h, cls.U.data());
    h = fnv1a(h, cls.d);
    return h;
}

} // namespace dbncls
