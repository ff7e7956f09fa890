#include "spde/types.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace spde {

Mat2 ModelParams::diffusion() const {
    const double c = std::cos(alpha), s = std::sin(alpha);
    const double g2 = gamma_aniso * gamma_aniso;
    const double r2 = rho1 * rho1;
    // (M^T M)^{-1} has determinant 1/gamma^2; expand it directly.
    Mat2 sig;
    sig(0, 0) = r2 * (s * s / g2 + c * c);
    sig(1, 1) = r2 * (c * c / g2 + s * s);
    sig(0, 1) = sig(1, 0) = r2 * c * s * (1.0 - 1.0 / g2);
    return sig;
}

void ModelParams::validate() const {
    auto require = [](bool ok, const std::string& what) {
        if (!ok) throw std::invalid_argument("ModelParams: " + what);
    };
    require(rho0 > 0.0, "rho0 must be > 0");
    require(sigma2 >= 0.0, "sigma2 must be >= 0");
    require(zeta > 0.0, "zeta must be > 0");
    require(rho1 > 0.0, "rho1 must be > 0");
    require(gamma_aniso > 0.0, "gamma_aniso must be > 0");
    require(alpha >= 0.0 && alpha <= M_PI / 2.0 + 1e-12, "alpha must lie in [0, pi/2]");
    require(!tau2.empty(), "at least one noise class is required");
    require(!beta.empty(), "at least one bias class is required");
    for (double t : tau2) require(t > 0.0, "every tau2 entry must be > 0");
    for (double v : {rho0, sigma2, zeta, rho1, gamma_aniso, alpha, mu.x(), mu.y()})
        require(std::isfinite(v), "parameters must be finite");
}

double param_get(const ModelParams& p, ParamCoord c) {
    switch (c.id) {
        case ParamId::Rho0: return p.rho0;
        case ParamId::Sigma2: return p.sigma2;
        case ParamId::Zeta: return p.zeta;
        case ParamId::Rho1: return p.rho1;
        case ParamId::Gamma: return p.gamma_aniso;
        case ParamId::Alpha: return p.alpha;
        case ParamId::MuX: return p.mu.x();
        case ParamId::MuY: return p.mu.y();
        case ParamId::Tau2: return p.tau2.at(c.cls);
        case ParamId::Beta: return p.beta.at(c.cls);
    }
    throw std::logic_error("param_get: bad coordinate");
}

void param_set(ModelParams& p, ParamCoord c, double value) {
    switch (c.id) {
        case ParamId::Rho0: p.rho0 = value; return;
        case ParamId::Sigma2: p.sigma2 = value; return;
        case ParamId::Zeta: p.zeta = value; return;
        case ParamId::Rho1: p.rho1 = value; return;
        case ParamId::Gamma: p.gamma_aniso = value; return;
        case ParamId::Alpha: p.alpha = value; return;
        case ParamId::MuX: p.mu.x() = value; return;
        case ParamId::MuY: p.mu.y() = value; return;
        case ParamId::Tau2: p.tau2.at(c.cls) = value; return;
        case ParamId::Beta: p.beta.at(c.cls) = value; return;
    }
    throw std::logic_error("param_set: bad coordinate");
}

std::string param_name(ParamCoord c) {
    switch (c.id) {
        case ParamId::Rho0: return "rho0";
        case ParamId::Sigma2: return "sigma2";
        case ParamId::Zeta: return "zeta";
        case ParamId::Rho1: return "rho1";
        case ParamId::Gamma: return "gamma";
        case ParamId::Alpha: return "alpha";
        case ParamId::MuX: return "mu_x";
        case ParamId::MuY: return "mu_y";
        case ParamId::Tau2: return "tau2_" + std::to_string(c.cls);
        case ParamId::Beta: return "beta_" + std::to_string(c.cls);
    }
    throw std::logic_error("param_name: bad coordinate");
}

ParamCoord param_coord_from_name(const std::string& name) {
    static const std::map<std::string, ParamId> scalars = {
        {"rho0", ParamId::Rho0},   {"sigma2", ParamId::Sigma2}, {"zeta", ParamId::Zeta},
        {"rho1", ParamId::Rho1},   {"gamma", ParamId::Gamma},   {"alpha", ParamId::Alpha},
        {"mu_x", ParamId::MuX},    {"mu_y", ParamId::MuY}};
    if (auto it = scalars.find(name); it != scalars.end()) return {it->second, 0};
    for (const auto& [prefix, id] :
         {std::pair<std::string, ParamId>{"tau2_", ParamId::Tau2}, {"beta_", ParamId::Beta}}) {
        if (name.rfind(prefix, 0) == 0) {
            try {
                return {id, std::stoi(name.substr(prefix.size()))};
            } catch (const std::exception&) {
            }
        }
    }
    throw std::invalid_argument("unknown parameter coordinate '" + name + "'");
}

std::vector<ParamCoord> all_param_coords(const ModelParams& p) {
    std::vector<ParamCoord> out;
    for (ParamId id : {ParamId::Rho0, ParamId::Sigma2, ParamId::Zeta, ParamId::Rho1,
                       ParamId::Gamma, ParamId::Alpha, ParamId::MuX, ParamId::MuY})
        out.push_back({id, 0});
    for (int c = 0; c < p.noise_classes(); ++c) out.push_back({ParamId::Tau2, c});
    for (int c = 0; c < p.bias_classes(); ++c) out.push_back({ParamId::Beta, c});
    return out;
}

bool ParameterSpace::contains(ParamCoord c, double value) const {
    return value >= param_get(lower, c) && value <= param_get(upper, c);
}

void ParameterSpace::validate(const ModelParams& shape) const {
    for (ParamCoord c : all_param_coords(shape)) {
        if (!(param_get(lower, c) < param_get(upper, c)))
            throw std::invalid_argument("ParameterSpace: lower >= upper for " + param_name(c));
    }
}

ParameterSpace ParameterSpace::wide(const ModelParams& shape) {
    ParameterSpace box{shape, shape};
    auto assign = [&](ParamId id, double lo, double hi) {
        param_set(box.lower, {id, 0}, lo);
        param_set(box.upper, {id, 0}, hi);
    };
    assign(ParamId::Rho0, 1e-3, 5.0);
    assign(ParamId::Sigma2, 1e-6, 10.0);
    assign(ParamId::Zeta, 1e-3, 10.0);
    assign(ParamId::Rho1, 1e-3, 5.0);
    assign(ParamId::Gamma, 0.05, 20.0);
    assign(ParamId::Alpha, 0.0, M_PI / 2.0);
    assign(ParamId::MuX, -5.0, 5.0);
    assign(ParamId::MuY, -5.0, 5.0);
    for (int c = 0; c < shape.noise_classes(); ++c) {
        param_set(box.lower, {ParamId::Tau2, c}, 1e-6);
        param_set(box.upper, {ParamId::Tau2, c}, 10.0);
    }
    for (int c = 0; c < shape.bias_classes(); ++c) {
        param_set(box.lower, {ParamId::Beta, c}, -20.0);
        param_set(box.upper, {ParamId::Beta, c}, 20.0);
    }
    return box;
}

bool in_upper_half_plane(const WaveNumber& k) {
    const int s = k.kx + k.ky;
    return s > 0 || (s == 0 && k.kx > 0);
}

namespace {

// Half-plane wavenumbers sorted by (|k|^2, kx, ky), at least `count` of them.
std::vector<WaveNumber> enumerate_half_plane(std::size_t count) {
    std::vector<WaveNumber> out;
    int radius = 2;
    while (out.size() < count) {
        out.clear();
        for (int kx = -radius; kx <= radius; ++kx)
            for (int ky = -radius; ky <= radius; ++ky) {
                WaveNumber k{kx, ky};
                if (k.sq_norm() > radius * radius) continue;
                if (in_upper_half_plane(k)) out.push_back(k);
            }
        std::sort(out.begin(), out.end(), [](const WaveNumber& a, const WaveNumber& b) {
            return std::tuple(a.sq_norm(), a.kx, a.ky) < std::tuple(b.sq_norm(), b.kx, b.ky);
        });
        // Keep only full |k|^2 shells so the cutoff is unambiguous.
        while (!out.empty() && out.back().sq_norm() > (radius - 1) * (radius - 1)) out.pop_back();
        radius *= 2;
    }
    return out;
}

} // namespace

WaveNumberSet build_truncation(int target_n, bool include_constant) {
    if (target_n < 1) throw std::invalid_argument("build_truncation: target_n must be positive");
    const int base = include_constant ? 1 : 0;
    if ((target_n - base) % 2 != 0 || target_n < base) {
        std::ostringstream msg;
        msg << "build_truncation: no exact truncation with n=" << target_n
            << (include_constant ? " (constant mode included, n must be odd)"
                                 : " (no constant mode, n must be even)")
            << "; nearest achievable sizes are " << std::max(base, target_n - 1) << " and "
            << target_n + 1;
        throw std::invalid_argument(msg.str());
    }
    const std::size_t pairs = static_cast<std::size_t>((target_n - base) / 2);
    auto all = enumerate_half_plane(pairs);
    WaveNumberSet ws;
    ws.include_constant = include_constant;
    ws.ks.assign(all.begin(), all.begin() + pairs);
    return ws;
}

WaveNumberSet build_truncation_by_norm(int max_sq_norm, bool include_constant) {
    if (max_sq_norm < 0) throw std::invalid_argument("build_truncation_by_norm: negative cutoff");
    auto all = enumerate_half_plane(static_cast<std::size_t>(4 * (max_sq_norm + 2)));
    WaveNumberSet ws;
    ws.include_constant = include_constant;
    for (const auto& k : all)
        if (k.sq_norm() <= max_sq_norm) ws.ks.push_back(k);
    return ws;
}

int SensorArray::movable_count() const {
    int c = 0;
    for (const auto& s : sensors) c += s.movable ? 1 : 0;
    return c;
}

std::vector<int> SensorArray::movable_indices() const {
    std::vector<int> idx;
    for (int i = 0; i < size(); ++i)
        if (sensors[i].movable) idx.push_back(i);
    return idx;
}

void SensorArray::validate(const ModelParams& p) const {
    if (!(radius > 0.0 && radius < 0.5))
        throw std::invalid_argument("SensorArray: radius must lie in (0, 0.5)");
    if (sensors.empty()) throw std::invalid_argument("SensorArray: at least one sensor required");
    for (const auto& s : sensors) {
        if (s.noise_class < 0 || s.noise_class >= p.noise_classes())
            throw std::invalid_argument("SensorArray: noise class out of range");
        if (s.bias_class < 0 || s.bias_class >= p.bias_classes())
            throw std::invalid_argument("SensorArray: bias class out of range");
        if (!s.pos.allFinite()) throw std::invalid_argument("SensorArray: non-finite position");
    }
}

double wrap_unit(double x) {
    double y = x - std::floor(x);
    if (y >= 1.0) y -= 1.0; // floor rounding at exact integers
    return y;
}

Vec2 wrap_torus(const Vec2& x) { return {wrap_unit(x.x()), wrap_unit(x.y())}; }

Vec2 torus_delta(const Vec2& a, const Vec2& b) {
    Vec2 d = b - a;
    for (int i = 0; i < 2; ++i) {
        d[i] -= std::round(d[i]);
        if (d[i] == 0.5) d[i] = -0.5;
    }
    return d;
}

double torus_distance(const Vec2& a, const Vec2& b) { return torus_delta(a, b).norm(); }

} // namespace spde
