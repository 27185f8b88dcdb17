#include "panelcast/neural.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "panelcast/error.hpp"
#include "panelcast/random.hpp"

namespace panelcast {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::uint64_t fingerprint(const std::vector<std::span<const double>>& blocks) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto blk : blocks) {
        for (double v : blk) {
            std::uint64_t bits;
            std::memcpy(&bits, &v, sizeof bits);
            h = (h ^ bits) * 0x100000001b3ULL;
            h ^= h >> 29;
        }
    }
    return h;
}

void fill_uniform(std::span<double> v, double r, Rng& rng) {
    for (double& x : v) x = rng.uniform(-r, r);
}

std::span<double> as_span(Matrix& m) { return m.data(); }
std::span<const double> as_span(const Matrix& m) { return m.data(); }

void check_input(std::size_t expected, std::size_t got, const char* what) {
    if (expected != got) {
        throw DimensionError(std::string(what) + " expects input of size " + std::to_string(expected) +
                             ", got " + std::to_string(got));
    }
}

// ---------------------------------------------------------------------------
// MLP internals

struct MlpTrace {
    std::vector<Vector> inputs;   // input to each layer (post-mask), plus final output
    std::vector<Vector> outputs;  // activation output of each layer before masking
    std::vector<Vector> masks;    // per hidden layer; empty when dropout is off
};

double mlp_forward_impl(const MlpModel& m, std::span<const double> x, MlpTrace& tr, Rng* rng, double dropout) {
    const std::size_t L = m.layers.size();
    tr.inputs.resize(L + 1);
    tr.outputs.resize(L);
    tr.masks.assign(rng ? L : 0, Vector{});
    tr.inputs[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < L; ++l) {
        const auto& layer = m.layers[l];
        const auto& in = tr.inputs[l];
        Vector& out = tr.outputs[l];
        out.resize(layer.W.rows());
        for (std::size_t r = 0; r < layer.W.rows(); ++r) {
            const auto w = layer.W.row(r);
            double z = layer.b[r];
            for (std::size_t c = 0; c < w.size(); ++c) z += w[c] * in[c];
            out[r] = layer.activation == Activation::tanh ? std::tanh(z) : z;
        }
        Vector next = out;
        if (rng && l + 1 < L) {
            Vector& mask = tr.masks[l];
            mask.resize(out.size());
            const double keep = 1.0 / (1.0 - dropout);
            for (std::size_t r = 0; r < out.size(); ++r) {
                mask[r] = rng->uniform() < dropout ? 0.0 : keep;
                next[r] *= mask[r];
            }
        }
        tr.inputs[l + 1] = std::move(next);
    }
    return tr.inputs[L][0];
}

void mlp_backward_impl(const MlpModel& m, const MlpTrace& tr, double target, double scale, MlpGradients& g) {
    const std::size_t L = m.layers.size();
    Vector delta{scale * 2.0 * (tr.inputs[L][0] - target)};
    for (std::size_t l = L; l-- > 0;) {
        const auto& layer = m.layers[l];
        if (layer.activation == Activation::tanh) {
            for (std::size_t r = 0; r < delta.size(); ++r) {
                const double t = tr.outputs[l][r];
                delta[r] *= 1.0 - t * t;
            }
        }
        const auto& in = tr.inputs[l];
        for (std::size_t r = 0; r < delta.size(); ++r) {
            if (delta[r] == 0.0) continue;
            auto dw = g.dW[l].row(r);
            for (std::size_t c = 0; c < in.size(); ++c) dw[c] += delta[r] * in[c];
            g.db[l][r] += delta[r];
        }
        if (l == 0) break;
        Vector prev(in.size(), 0.0);
        for (std::size_t r = 0; r < delta.size(); ++r) {
            const auto w = layer.W.row(r);
            for (std::size_t c = 0; c < prev.size(); ++c) prev[c] += w[c] * delta[r];
        }
        if (!tr.masks.empty() && !tr.masks[l - 1].empty()) {
            for (std::size_t c = 0; c < prev.size(); ++c) prev[c] *= tr.masks[l - 1][c];
        }
        delta = std::move(prev);
    }
}

MlpGradients zero_gradients(const MlpModel& m) {
    MlpGradients g;
    for (const auto& layer : m.layers) {
        g.dW.emplace_back(layer.W.rows(), layer.W.cols(), 0.0);
        g.db.emplace_back(layer.b.size(), 0.0);
    }
    return g;
}

std::vector<std::span<const double>> gradient_blocks(const MlpGradients& g) {
    std::vector<std::span<const double>> out;
    for (std::size_t l = 0; l < g.dW.size(); ++l) {
        out.push_back(as_span(g.dW[l]));
        out.emplace_back(g.db[l]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// LSTM internals

void affine_into(Vector& z, const Matrix& W, std::span<const double> x, const Matrix& U,
                 std::span<const double> h, const Vector& b) {
    const std::size_t H = b.size();
    z.resize(H);
    for (std::size_t r = 0; r < H; ++r) {
        double s = b[r];
        const auto wr = W.row(r);
        for (std::size_t c = 0; c < x.size(); ++c) s += wr[c] * x[c];
        const auto ur = U.row(r);
        for (std::size_t c = 0; c < h.size(); ++c) s += ur[c] * h[c];
        z[r] = s;
    }
}

void lstm_step_cached(const LstmParams& p, std::span<const double> x, const Vector& h_prev, const Vector& C_prev,
                      LstmStepCache& sc) {
    const std::size_t H = p.hidden;
    sc.x.assign(x.begin(), x.end());
    sc.h_prev = h_prev;
    sc.C_prev = C_prev;
    affine_into(sc.f, p.Wf, x, p.Uf, h_prev, p.bf);
    affine_into(sc.i, p.Wi, x, p.Ui, h_prev, p.bi);
    affine_into(sc.g, p.Wc, x, p.Uc, h_prev, p.bc);
    affine_into(sc.o, p.Wo, x, p.Uo, h_prev, p.bo);
    sc.C.resize(H);
    sc.tanh_C.resize(H);
    for (std::size_t r = 0; r < H; ++r) {
        sc.f[r] = sigmoid(sc.f[r]);
        sc.i[r] = sigmoid(sc.i[r]);
        sc.g[r] = std::tanh(sc.g[r]);
        sc.C[r] = sc.f[r] * C_prev[r] + sc.i[r] * sc.g[r];
        sc.o[r] = sigmoid(sc.o[r]);
        sc.tanh_C[r] = std::tanh(sc.C[r]);
    }
}

double lstm_forward_impl(const LstmParams& p, const Sequence& xs, LstmCache& cache, Rng* rng, double dropout) {
    const std::size_t H = p.hidden;
    cache.steps.resize(xs.size());
    Vector h(H, 0.0), C(H, 0.0);
    for (std::size_t t = 0; t < xs.size(); ++t) {
        check_input(p.input, xs[t].size(), "lstm_forward_seq");
        auto& sc = cache.steps[t];
        lstm_step_cached(p, xs[t], h, C, sc);
        C = sc.C;
        for (std::size_t r = 0; r < H; ++r) h[r] = sc.o[r] * sc.tanh_C[r];
    }
    cache.mask.clear();
    if (rng) {
        cache.mask.resize(H);
        const double keep = 1.0 / (1.0 - dropout);
        for (std::size_t r = 0; r < H; ++r) {
            cache.mask[r] = rng->uniform() < dropout ? 0.0 : keep;
            h[r] *= cache.mask[r];
        }
    }
    cache.h_final = h;
    double y = p.readout_b;
    for (std::size_t r = 0; r < H; ++r) y += p.readout_w[r] * h[r];
    return y;
}

void add_outer(Matrix& G, const Vector& dz, const Vector& v) {
    for (std::size_t r = 0; r < dz.size(); ++r) {
        if (dz[r] == 0.0) continue;
        auto row = G.row(r);
        for (std::size_t c = 0; c < v.size(); ++c) row[c] += dz[r] * v[c];
    }
}

void add_transpose_product(Vector& out, const Matrix& U, const Vector& dz) {
    for (std::size_t r = 0; r < dz.size(); ++r) {
        const auto row = U.row(r);
        for (std::size_t c = 0; c < out.size(); ++c) out[c] += row[c] * dz[r];
    }
}

void lstm_backward_impl(const LstmParams& p, const LstmCache& cache, double prediction, double target,
                        double scale, LstmParams& g) {
    const std::size_t H = p.hidden;
    const double dy = scale * 2.0 * (prediction - target);
    g.readout_b += dy;
    Vector dh(H), dC(H, 0.0);
    for (std::size_t r = 0; r < H; ++r) {
        g.readout_w[r] += dy * cache.h_final[r];
        dh[r] = dy * p.readout_w[r] * (cache.mask.empty() ? 1.0 : cache.mask[r]);
    }
    Vector dzf(H), dzi(H), dzg(H), dzo(H);
    for (std::size_t t = cache.steps.size(); t-- > 0;) {
        const auto& s = cache.steps[t];
        for (std::size_t r = 0; r < H; ++r) {
            const double d_o = dh[r] * s.tanh_C[r];
            const double dc = dC[r] + dh[r] * s.o[r] * (1.0 - s.tanh_C[r] * s.tanh_C[r]);
            dzf[r] = dc * s.C_prev[r] * s.f[r] * (1.0 - s.f[r]);
            dzi[r] = dc * s.g[r] * s.i[r] * (1.0 - s.i[r]);
            dzg[r] = dc * s.i[r] * (1.0 - s.g[r] * s.g[r]);
            dzo[r] = d_o * s.o[r] * (1.0 - s.o[r]);
            dC[r] = dc * s.f[r];
        }
        add_outer(g.Wf, dzf, s.x);
        add_outer(g.Wi, dzi, s.x);
        add_outer(g.Wc, dzg, s.x);
        add_outer(g.Wo, dzo, s.x);
        add_outer(g.Uf, dzf, s.h_prev);
        add_outer(g.Ui, dzi, s.h_prev);
        add_outer(g.Uc, dzg, s.h_prev);
        add_outer(g.Uo, dzo, s.h_prev);
        for (std::size_t r = 0; r < H; ++r) {
            g.bf[r] += dzf[r];
            g.bi[r] += dzi[r];
            g.bc[r] += dzg[r];
            g.bo[r] += dzo[r];
        }
        std::fill(dh.begin(), dh.end(), 0.0);
        add_transpose_product(dh, p.Uf, dzf);
        add_transpose_product(dh, p.Ui, dzi);
        add_transpose_product(dh, p.Uc, dzg);
        add_transpose_product(dh, p.Uo, dzo);
    }
}

// ---------------------------------------------------------------------------
// Safeguarded descent shared by both model kinds.

template <class Model, class LossFn, class GradFn>
Model safeguarded_descent(Model model, const TrainOptions& opts, LossFn clean_loss, GradFn batch_grad,
                          TrainReport* report) {
    opts.validate();
    Rng rng(derive_seed(opts.seed, 0xd40f));
    double loss = clean_loss(model);
    if (!std::isfinite(loss)) throw NumericError("non-finite training loss at epoch 0");
    TrainReport rep;
    rep.loss.push_back(loss);
    double rate = opts.rate;
    for (std::size_t epoch = 1; epoch <= opts.epochs; ++epoch) {
        const auto grads = batch_grad(model, opts.dropout > 0.0 ? &rng : nullptr);
        Model candidate = model;
        auto blocks = candidate.parameter_blocks();
        const auto gblocks = grads.blocks();
        for (std::size_t k = 0; k < blocks.size(); ++k) {
            for (std::size_t i = 0; i < blocks[k].size(); ++i) blocks[k][i] -= rate * gblocks[k][i];
        }
        const double next = clean_loss(candidate);
        if (!std::isfinite(next)) {
            throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        }
        if (next <= loss) {
            model = std::move(candidate);
            loss = next;
        } else {
            ++rep.rejected_steps;
            rate *= 0.5;
        }
        rep.loss.push_back(loss);
    }
    rep.final_rate = rate;
    if (report) *report = std::move(rep);
    return model;
}

struct MlpBatchGrad {
    MlpGradients g;
    [[nodiscard]] std::vector<std::span<const double>> blocks() const { return gradient_blocks(g); }
};

struct LstmBatchGrad {
    LstmParams g;
    [[nodiscard]] std::vector<std::span<const double>> blocks() const { return g.parameter_blocks(); }
};

}  // namespace

// ---------------------------------------------------------------------------

MlpModel MlpModel::create(std::size_t inputs, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
    if (inputs == 0) throw ConfigError("MLP needs at least one input");
    Rng rng(derive_seed(seed, 0x313));
    MlpModel m;
    std::size_t fan_in = inputs;
    auto add = [&](std::size_t out, Activation act) {
        DenseLayer layer{Matrix(out, fan_in), Vector(out, 0.0), act};
        fill_uniform(as_span(layer.W), 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
        m.layers.push_back(std::move(layer));
        fan_in = out;
    };
    for (auto h : hidden) {
        if (h == 0) throw ConfigError("MLP hidden layers must be non-empty");
        add(h, Activation::tanh);
    }
    add(1, Activation::identity);
    return m;
}

std::size_t MlpModel::input_dim() const { return layers.empty() ? 0 : layers.front().W.cols(); }

std::vector<std::span<double>> MlpModel::parameter_blocks() {
    std::vector<std::span<double>> out;
    for (auto& l : layers) {
        out.push_back(as_span(l.W));
        out.emplace_back(l.b);
    }
    return out;
}

std::vector<std::span<const double>> MlpModel::parameter_blocks() const {
    std::vector<std::span<const double>> out;
    for (const auto& l : layers) {
        out.push_back(as_span(l.W));
        out.emplace_back(l.b);
    }
    return out;
}

void MlpModel::validate() const {
    if (layers.empty()) throw DimensionError("MLP has no layers");
    for (std::size_t l = 0; l < layers.size(); ++l) {
        if (layers[l].b.size() != layers[l].W.rows()) throw DimensionError("MLP bias/weight mismatch");
        if (l > 0 && layers[l].W.cols() != layers[l - 1].W.rows()) {
            throw DimensionError("MLP layer " + std::to_string(l) + " does not chain with its predecessor");
        }
    }
    if (layers.back().W.rows() != 1 || layers.back().activation != Activation::identity) {
        throw DimensionError("MLP output layer must be a single identity unit");
    }
}

std::pair<double, MlpCache> mlp_forward(const MlpModel& model, std::span<const double> x) {
    model.validate();
    check_input(model.input_dim(), x.size(), "mlp_forward");
    MlpTrace tr;
    const double y = mlp_forward_impl(model, x, tr, nullptr, 0.0);
    MlpCache cache{std::move(tr.inputs), fingerprint(model.parameter_blocks())};
    return {y, std::move(cache)};
}

MlpGradients mlp_backward(const MlpModel& model, const MlpCache& cache, double target) {
    if (cache.activations.size() != model.layers.size() + 1 ||
        cache.fingerprint != fingerprint(model.parameter_blocks())) {
        throw Error("stale MLP cache: parameters changed since the forward pass");
    }
    MlpTrace tr;
    tr.inputs = cache.activations;
    tr.outputs.assign(cache.activations.begin() + 1, cache.activations.end());
    MlpGradients g = zero_gradients(model);
    mlp_backward_impl(model, tr, target, 1.0, g);
    return g;
}

Vector predict_mlp(const MlpModel& model, const Matrix& X) {
    model.validate();
    check_input(model.input_dim(), X.cols(), "predict_mlp");
    Vector out(X.rows());
    MlpTrace tr;
    for (std::size_t i = 0; i < X.rows(); ++i) out[i] = mlp_forward_impl(model, X.row(i), tr, nullptr, 0.0);
    return out;
}

// ---------------------------------------------------------------------------

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden) {
    LstmParams p;
    p.input = input;
    p.hidden = hidden;
    for (Matrix* W : {&p.Wf, &p.Wi, &p.Wc, &p.Wo}) *W = Matrix(hidden, input);
    for (Matrix* U : {&p.Uf, &p.Ui, &p.Uc, &p.Uo}) *U = Matrix(hidden, hidden);
    for (Vector* b : {&p.bf, &p.bi, &p.bc, &p.bo, &p.readout_w}) b->assign(hidden, 0.0);
    return p;
}

LstmParams LstmParams::create(std::size_t input, std::size_t hidden, std::uint64_t seed) {
    if (input == 0 || hidden == 0) throw ConfigError("LSTM input and hidden sizes must be positive");
    LstmParams p = zeros(input, hidden);
    Rng rng(derive_seed(seed, 0x157));
    const double r_in = 1.0 / std::sqrt(static_cast<double>(input + hidden));
    for (Matrix* W : {&p.Wf, &p.Wi, &p.Wc, &p.Wo, &p.Uf, &p.Ui, &p.Uc, &p.Uo}) {
        fill_uniform(as_span(*W), r_in, rng);
    }
    fill_uniform(p.readout_w, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
    return p;
}

std::vector<std::span<double>> LstmParams::parameter_blocks() {
    return {as_span(Wf), as_span(Wi), as_span(Wc), as_span(Wo), as_span(Uf), as_span(Ui),
            as_span(Uc), as_span(Uo), bf,          bi,          bc,          bo,
            readout_w,   std::span<double>(&readout_b, 1)};
}

std::vector<std::span<const double>> LstmParams::parameter_blocks() const {
    return {as_span(Wf), as_span(Wi), as_span(Wc), as_span(Wo), as_span(Uf), as_span(Ui),
            as_span(Uc), as_span(Uo), bf,          bi,          bc,          bo,
            readout_w,   std::span<const double>(&readout_b, 1)};
}

void LstmParams::validate() const {
    for (const Matrix* W : {&Wf, &Wi, &Wc, &Wo}) {
        if (W->rows() != hidden || W->cols() != input) throw DimensionError("LSTM input weights have wrong shape");
    }
    for (const Matrix* U : {&Uf, &Ui, &Uc, &Uo}) {
        if (U->rows() != hidden || U->cols() != hidden) throw DimensionError("LSTM recurrent weights have wrong shape");
    }
    for (const Vector* b : {&bf, &bi, &bc, &bo, &readout_w}) {
        if (b->size() != hidden) throw DimensionError("LSTM bias has wrong size");
    }
}

LstmState lstm_step(const LstmParams& p, const LstmState& s, std::span<const double> x) {
    p.validate();
    check_input(p.input, x.size(), "lstm_step");
    if (s.h.size() != p.hidden || s.C.size() != p.hidden) throw DimensionError("LSTM state has wrong size");
    LstmStepCache sc;
    lstm_step_cached(p, x, s.h, s.C, sc);
    LstmState out{Vector(p.hidden), sc.C};
    for (std::size_t r = 0; r < p.hidden; ++r) out.h[r] = sc.o[r] * sc.tanh_C[r];
    return out;
}

std::pair<double, LstmCache> lstm_forward_seq(const LstmParams& p, const Sequence& xs) {
    p.validate();
    if (xs.empty()) throw DimensionError("LSTM needs a non-empty sequence");
    LstmCache cache;
    const double y = lstm_forward_impl(p, xs, cache, nullptr, 0.0);
    cache.fingerprint = fingerprint(p.parameter_blocks());
    return {y, std::move(cache)};
}

LstmParams lstm_backward(const LstmParams& p, const LstmCache& cache, double target) {
    if (cache.fingerprint != fingerprint(p.parameter_blocks()) || cache.steps.empty()) {
        throw Error("stale LSTM cache: parameters changed since the forward pass");
    }
    double y = p.readout_b;
    for (std::size_t r = 0; r < p.hidden; ++r) y += p.readout_w[r] * cache.h_final[r];
    LstmParams g = LstmParams::zeros(p.input, p.hidden);
    lstm_backward_impl(p, cache, y, target, 1.0, g);
    return g;
}

Vector predict_lstm(const LstmParams& p, const std::vector<Sequence>& xs) {
    p.validate();
    Vector out(xs.size());
    LstmCache cache;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i].empty()) throw DimensionError("LSTM needs a non-empty sequence");
        out[i] = lstm_forward_impl(p, xs[i], cache, nullptr, 0.0);
    }
    return out;
}

std::vector<Sequence> to_sequences(const SupervisedMatrix& m) {
    const int l = m.lag;
    if (m.columns.size() != m.d()) throw DimensionError("supervised matrix has no column labels");
    // Column index per (offset, predictor) and per lagged-target offset.
    std::vector<std::vector<std::size_t>> pred(static_cast<std::size_t>(l) + 1);
    std::vector<std::size_t> lagged(static_cast<std::size_t>(l) + 1, SIZE_MAX);
    for (std::size_t c = 0; c < m.columns.size(); ++c) {
        const auto& lab = m.columns[c];
        const auto o = static_cast<std::size_t>(lab.offset);
        if (o > static_cast<std::size_t>(l)) throw DimensionError("column offset exceeds lag");
        if (lab.kind == ColumnLabel::Kind::predictor) {
            pred[o].push_back(c);
        } else {
            lagged[o] = c;
        }
    }
    const std::size_t p = pred[0].size();
    std::vector<Sequence> out(m.n());
    for (std::size_t i = 0; i < m.n(); ++i) {
        const auto row = m.X.row(i);
        Sequence& seq = out[i];
        seq.reserve(static_cast<std::size_t>(l) + 1);
        for (int o = l; o >= 0; --o) {
            const auto ou = static_cast<std::size_t>(o);
            if (pred[ou].size() != p) throw DimensionError("uneven predictor blocks");
            Vector v(p + 1, 0.0);
            for (std::size_t k = 0; k < p; ++k) v[k] = row[pred[ou][k]];
            if (o > 0 && lagged[ou] != SIZE_MAX) v[p] = row[lagged[ou]];
            seq.push_back(std::move(v));
        }
    }
    return out;
}

void TrainOptions::validate() const {
    if (epochs < 1) throw ConfigError("training needs at least one epoch");
    if (!(rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
}

MlpModel train_gd(MlpModel model, const Matrix& X, std::span<const double> y, const TrainOptions& opts,
                  TrainReport* report) {
    model.validate();
    check_input(model.input_dim(), X.cols(), "train_gd");
    if (X.rows() == 0 || y.size() != X.rows()) throw DimensionError("train_gd: X and y row counts differ");
    const double scale = 1.0 / static_cast<double>(X.rows());
    MlpTrace tr;
    auto clean_loss = [&](const MlpModel& m) {
        double s = 0.0;
        for (std::size_t i = 0; i < X.rows(); ++i) {
            const double e = mlp_forward_impl(m, X.row(i), tr, nullptr, 0.0) - y[i];
            s += e * e;
        }
        return s * scale;
    };
    auto batch_grad = [&](const MlpModel& m, Rng* rng) {
        MlpBatchGrad g{zero_gradients(m)};
        for (std::size_t i = 0; i < X.rows(); ++i) {
            mlp_forward_impl(m, X.row(i), tr, rng, opts.dropout);
            mlp_backward_impl(m, tr, y[i], scale, g.g);
        }
        return g;
    };
    return safeguarded_descent(std::move(model), opts, clean_loss, batch_grad, report);
}

LstmParams train_gd(LstmParams model, const std::vector<Sequence>& xs, std::span<const double> y,
                    const TrainOptions& opts, TrainReport* report) {
    model.validate();
    if (xs.empty() || y.size() != xs.size()) throw DimensionError("train_gd: sequence and target counts differ");
    for (const auto& s : xs) {
        if (s.empty()) throw DimensionError("LSTM needs non-empty sequences");
    }
    const double scale = 1.0 / static_cast<double>(xs.size());
    LstmCache cache;
    auto clean_loss = [&](const LstmParams& p) {
        double s = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double e = lstm_forward_impl(p, xs[i], cache, nullptr, 0.0) - y[i];
            s += e * e;
        }
        return s * scale;
    };
    auto batch_grad = [&](const LstmParams& p, Rng* rng) {
        LstmBatchGrad g{LstmParams::zeros(p.input, p.hidden)};
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double pred = lstm_forward_impl(p, xs[i], cache, rng, opts.dropout);
            lstm_backward_impl(p, cache, pred, y[i], scale, g.g);
        }
        return g;
    };
    return safeguarded_descent(std::move(model), opts, clean_loss, batch_grad, report);
}

}  // namespace panelcast
