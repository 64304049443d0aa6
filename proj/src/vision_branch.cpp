#include "trits/vision_branch.hpp"

#include <cmath>

#include "trits/log.hpp"
#include "trits/ssm_math.hpp"

namespace trits {

std::vector<double> mean_acf(const Tensor& x, std::size_t max_lag) {
    if (x.rank() != 3) throw ShapeError("mean_acf: expected [B, L, C], got " + shape_str(x.shape()));
    const std::size_t B = x.dim(0), L = x.dim(1), C = x.dim(2);
    std::vector<double> acf(max_lag + 1, 0.0);
    std::size_t used = 0;
    std::vector<double> s(L);
    for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t c = 0; c < C; ++c) {
            double mu = 0.0;
            for (std::size_t t = 0; t < L; ++t) mu += (s[t] = x[(b * L + t) * C + c]);
            mu /= static_cast<double>(L);
            double var = 0.0;
            for (std::size_t t = 0; t < L; ++t) {
                s[t] -= mu;
                var += s[t] * s[t];
            }
            if (!(var > 1e-12 * static_cast<double>(L) * (1.0 + mu * mu))) continue;
            ++used;
            for (std::size_t k = 0; k <= max_lag && k < L; ++k) {
                double r = 0.0;
                for (std::size_t t = 0; t + k < L; ++t) r += s[t] * s[t + k];
                acf[k] += r / var;
            }
        }
    }
    if (used == 0) return {};
    for (double& v : acf) v /= static_cast<double>(used);
    return acf;
}

PeriodEstimate detect_period(const Tensor& x, std::size_t fallback) {
    if (x.rank() != 3) throw ShapeError("detect_period: expected [B, L, C], got " + shape_str(x.shape()));
    const std::size_t L = x.dim(1);
    if (L < 8) throw ContractError("detect_period: need L >= 8, got " + std::to_string(L));
    const std::size_t max_lag = L / 2;
    const auto acf = mean_acf(x, max_lag);
    PeriodEstimate est;
    if (acf.empty()) {
        log_warning("constant input, autocorrelation undefined; using period " + std::to_string(fallback));
        est.period = std::min(fallback, max_lag);
        est.rows = L / est.period;
        est.fallback = true;
        return est;
    }
    std::size_t start = 2;
    while (start <= max_lag && acf[start] >= 0.0) ++start;
    if (start > max_lag) start = 2;
    std::size_t best = start;
    for (std::size_t k = start + 1; k <= max_lag; ++k) {
        if (acf[k] > acf[best] + 1e-9) best = k;
    }
    est.period = best;
    est.acf_score = acf[best];
    est.rows = L / best;
    return est;
}

Var reshape_to_image(const Var& x, std::size_t period) {
    const auto& s = x->shape();
    if (s.size() != 3) throw ShapeError("reshape_to_image: expected [B, L, C], got " + shape_str(s));
    if (period < 2) throw ConfigError("period must be >= 2, got " + std::to_string(period));
    const std::size_t L = s[1], rows = L / period;
    if (rows < 2) {
        throw ConfigError("lookback " + std::to_string(L) + " holds fewer than two periods of " +
                          std::to_string(period));
    }
    const std::size_t drop = L % period;
    auto kept = drop > 0 ? slice(x, 1, drop, L) : x;
    return reshape(kept, {s[0], rows, period, s[2]});
}

Var unfold_image(const Var& image) {
    const auto& s = image->shape();
    if (s.size() != 4) throw ShapeError("unfold_image: expected [B, S, P, C], got " + shape_str(s));
    return reshape(image, {s[0], s[1] * s[2], s[3]});
}

ZohResult zoh_discretize(const Tensor& a, const Tensor& b, const Tensor& delta) {
    if (a.shape() != b.shape()) throw ShapeError("zoh_discretize(A, B)", a.shape(), b.shape());
    if (a.shape() != delta.shape()) throw ShapeError("zoh_discretize(A, delta)", a.shape(), delta.shape());
    ZohResult r{Tensor(a.shape()), Tensor(a.shape())};
    for (std::size_t i = 0; i < a.numel(); ++i) {
        if (!(delta[i] > 0.0)) {
            throw ContractError("zoh_discretize: step size must be positive, got " + std::to_string(delta[i]) +
                                " at element " + std::to_string(i));
        }
        const auto z = ssm::zoh_scalar(a[i], b[i], delta[i]);
        r.a_bar[i] = z.a_bar;
        r.b_bar[i] = z.b_bar;
    }
    return r;
}

Var selective_scan(const Var& u, const Var& delta, const Var& a_log, const Var& b, const Var& c,
                   Direction dir) {
    if (dir == Direction::Forward) return selective_scan_op(u, delta, a_log, b, c);
    return flip(selective_scan_op(flip(u, 1), flip(delta, 1), a_log, flip(b, 1), flip(c, 1)), 1);
}

// --- Vim block ----------------------------------------------------------------

namespace {

ScanProjection make_scan_projection(std::size_t d_inner, std::size_t dt_rank, std::size_t n,
                                    std::mt19937_64& rng) {
    ScanProjection p;
    p.x_proj = Linear::make(d_inner, dt_rank + 2 * n, rng, false);
    const double bound = 1.0 / std::sqrt(static_cast<double>(dt_rank));
    p.dt_proj.weight = parameter(Tensor::uniform({dt_rank, d_inner}, -bound, bound, rng));
    // initial step sizes log-uniform in [1e-3, 1e-1]; the bias is their softplus inverse
    std::uniform_real_distribution<double> ud(std::log(1e-3), std::log(1e-1));
    Tensor bias({d_inner});
    for (double& v : bias.data()) {
        const double dt = std::exp(ud(rng));
        v = dt + std::log(-std::expm1(-dt));
    }
    p.dt_proj.bias = parameter(std::move(bias));
    p.d_skip = parameter(Tensor({d_inner}, 1.0));
    return p;
}

void collect_projection(const ScanProjection& p, const std::string& prefix, ParamList& out) {
    p.x_proj.collect(prefix + ".x_proj", out);
    p.dt_proj.collect(prefix + ".dt_proj", out);
    out.push_back({prefix + ".D", p.d_skip});
}

}  // namespace

VimBlock VimBlock::make(const VimConfig& cfg, std::mt19937_64& rng) {
    if (cfg.d_model == 0 || cfg.d_state == 0 || cfg.expand == 0) {
        throw ConfigError("vision.d_model, vision.d_state and vision.expand must be >= 1");
    }
    VimBlock blk;
    const std::size_t d = cfg.d_model, di = cfg.expand * d, n = cfg.d_state;
    blk.dt_rank_ = cfg.dt_rank > 0 ? cfg.dt_rank : (d + 15) / 16;
    blk.eps_ = cfg.norm_eps;
    blk.norm_weight = parameter(Tensor({d}, 1.0));
    blk.in_proj = Linear::make(d, 2 * di, rng, false);
    Tensor a_log({di, n});
    for (std::size_t i = 0; i < di; ++i)
        for (std::size_t j = 0; j < n; ++j) a_log[i * n + j] = std::log(static_cast<double>(j + 1));
    blk.a_log = parameter(std::move(a_log));
    blk.fwd = make_scan_projection(di, blk.dt_rank_, n, rng);
    blk.bwd = make_scan_projection(di, blk.dt_rank_, n, rng);
    blk.out_proj = Linear::make(di, d, rng, false);
    return blk;
}

ScanInputs VimBlock::scan_inputs(const Var& u, const ScanProjection& proj) const {
    const std::size_t n = d_state();
    auto xdbc = proj.x_proj(u);  // [B, N, R + 2n]
    auto dt_raw = slice(xdbc, 2, 0, dt_rank_);
    return {softplus(proj.dt_proj(dt_raw)), slice(xdbc, 2, dt_rank_, dt_rank_ + n),
            slice(xdbc, 2, dt_rank_ + n, dt_rank_ + 2 * n)};
}

std::pair<Var, Var> VimBlock::scan_directions(const Var& u) const {
    auto f = scan_inputs(u, fwd);
    auto b = scan_inputs(u, bwd);
    auto yf = add(selective_scan(u, f.delta, a_log, f.b, f.c, Direction::Forward), mul(u, fwd.d_skip));
    auto yb = add(selective_scan(u, b.delta, a_log, b.b, b.c, Direction::Backward), mul(u, bwd.d_skip));
    return {yf, yb};
}

Var VimBlock::operator()(const Var& h) const {
    const auto& s = h->shape();
    if (s.size() != 3 || s[2] != norm_weight->shape()[0]) {
        throw ShapeError("vim_block", s, norm_weight->shape());
    }
    const std::size_t di = d_inner();
    auto xz = in_proj(rms_norm(h, norm_weight, eps_));
    auto u = silu(slice(xz, 2, 0, di));
    auto z = slice(xz, 2, di, 2 * di);
    auto [yf, yb] = scan_directions(u);
    auto y = mul(scale(add(yf, yb), 0.5), silu(z));
    return add(h, out_proj(y));
}

void VimBlock::collect(const std::string& prefix, ParamList& out) const {
    out.push_back({prefix + ".norm.weight", norm_weight});
    in_proj.collect(prefix + ".in_proj", out);
    out.push_back({prefix + ".A_log", a_log});
    collect_projection(fwd, prefix + ".fwd", out);
    collect_projection(bwd, prefix + ".bwd", out);
    out_proj.collect(prefix + ".out_proj", out);
}

// --- branch -------------------------------------------------------------------

ImageGeometry image_geometry(std::size_t lookback, std::size_t period, std::size_t patch, std::size_t channels) {
    if (patch == 0) throw ConfigError("vision.patch must be >= 1");
    if (period < 2) throw ConfigError("period must be >= 2, got " + std::to_string(period));
    ImageGeometry g;
    g.period = period;
    g.rows = lookback / period;
    if (g.rows < 2) {
        throw ConfigError("lookback " + std::to_string(lookback) + " holds fewer than two periods of " +
                          std::to_string(period));
    }
    g.padded_rows = (g.rows + patch - 1) / patch * patch;
    g.padded_cols = (period + patch - 1) / patch * patch;
    g.tokens = (g.padded_rows / patch) * (g.padded_cols / patch);
    g.patch_dim = patch * patch * channels;
    return g;
}

VisionBranch VisionBranch::make(const VisionConfig& cfg, std::size_t lookback, std::size_t horizon,
                                std::size_t channels, std::size_t period, std::mt19937_64& rng) {
    VisionBranch v;
    v.cfg_ = cfg;
    v.geo_ = image_geometry(lookback, period, cfg.patch, channels);
    v.lookback_ = lookback;
    v.horizon_ = horizon;
    v.channels_ = channels;
    const std::size_t d = cfg.vim.d_model;
    v.embed_ = Linear::make(v.geo_.patch_dim, d, rng);
    v.pos_ = parameter(Tensor::randn({v.geo_.tokens, d}, 0.02, rng));
    for (std::size_t i = 0; i < cfg.depth; ++i) v.blocks_.push_back(VimBlock::make(cfg.vim, rng));
    v.final_norm_ = parameter(Tensor({d}, 1.0));
    v.head_ = Linear::make(v.geo_.tokens * d, horizon * channels, rng);
    return v;
}

Var VisionBranch::patchify(const Var& x) const {
    const auto& s = x->shape();
    if (s.size() != 3 || s[1] != lookback_ || s[2] != channels_) {
        throw ShapeError("vision_forward", s, Shape{s.empty() ? 0 : s[0], lookback_, channels_});
    }
    const std::size_t B = s[0], C = channels_, p = cfg_.patch;
    const std::size_t S = geo_.rows, P = geo_.period;
    auto img = reshape_to_image(x, P);  // [B, S, P, C]
    if (geo_.padded_rows > S) {
        img = concat({img, constant(Tensor({B, geo_.padded_rows - S, P, C}))}, 1);
    }
    if (geo_.padded_cols > P) {
        img = concat({img, constant(Tensor({B, geo_.padded_rows, geo_.padded_cols - P, C}))}, 2);
    }
    const std::size_t gr = geo_.padded_rows / p, gc = geo_.padded_cols / p;
    auto grid = reshape(img, {B, gr, p, gc, p, C});
    return reshape(permute(grid, {0, 1, 3, 2, 4, 5}), {B, gr * gc, p * p * C});
}

Var VisionBranch::operator()(const Var& x) const {
    const std::size_t B = x->shape().at(0);
    auto h = add(embed_(patchify(x)), pos_);
    for (const auto& blk : blocks_) h = blk(h);
    h = rms_norm(h, final_norm_, cfg_.vim.norm_eps);
    auto flat = reshape(h, {B, geo_.tokens * cfg_.vim.d_model});
    return reshape(head_(flat), {B, horizon_, channels_});
}

void VisionBranch::collect(const std::string& prefix, ParamList& out) const {
    embed_.collect(prefix + ".embed", out);
    out.push_back({prefix + ".pos", pos_});
    for (std::size_t i = 0; i < blocks_.size(); ++i) blocks_[i].collect(prefix + ".block" + std::to_string(i), out);
    out.push_back({prefix + ".final_norm.weight", final_norm_});
    head_.collect(prefix + ".head", out);
}

}  // namespace trits
