#include "superatom/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "superatom/errors.hpp"

namespace superatom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_finite(const std::vector<double>& v, const char* what) {
    for (double x : v) {
        if (!std::isfinite(x)) {
            std::ostringstream os;
            os << "TraceData: " << what << " must be finite";
            throw_invalid(os.str());
        }
    }
}

}  // namespace

void TraceData::validate() const {
    if (kind != TraceKind::photon_rate &&
        kind != TraceKind::rydberg_population)
        throw_invalid("TraceData: unknown kind");
    if (times_us.empty()) throw_invalid("TraceData: empty trace");
    if (values.size() != times_us.size() || sem.size() != times_us.size())
        throw_invalid("TraceData: times, values, sem must have equal lengths");
    require_finite(times_us, "times");
    require_finite(values, "values");
    for (std::size_t i = 1; i < times_us.size(); ++i)
        if (!(times_us[i] > times_us[i - 1]))
            throw_invalid("TraceData: times must increase strictly");
    for (double s : sem)
        if (!std::isfinite(s) || !(s > 0))
            throw_invalid("TraceData: sem must be positive and finite");
}

void FitProblem::set_free(FitParam p, double lower, double upper) {
    const int i = static_cast<int>(p);
    free[i] = ParamBounds{lower, upper};
    fixed[i].reset();
}

void FitProblem::set_fixed(FitParam p, double value) {
    const int i = static_cast<int>(p);
    fixed[i] = value;
    free[i].reset();
}

int FitProblem::free_count() const {
    int n = 0;
    for (const auto& b : free) n += b.has_value() ? 1 : 0;
    return n;
}

void FitProblem::validate() const {
    if (traces.empty()) throw_invalid("FitProblem: no traces");
    std::size_t points = 0;
    for (const auto& t : traces) {
        t.validate();
        points += t.times_us.size();
    }
    static constexpr const char* names[3] = {"kappa", "gamma", "gamma_d"};
    for (int i = 0; i < 3; ++i) {
        if (free[i].has_value() == fixed[i].has_value()) {
            std::ostringstream os;
            os << "FitProblem: " << names[i]
               << " must be exactly one of free or fixed";
            throw_invalid(os.str());
        }
        if (free[i]) {
            const ParamBounds& b = *free[i];
            if (!std::isfinite(b.lower) || !std::isfinite(b.upper) ||
                !(b.lower > 0) || !(b.upper > b.lower)) {
                std::ostringstream os;
                os << "FitProblem: bounds for " << names[i]
                   << " must satisfy 0 < lower < upper";
                throw_invalid(os.str());
            }
        } else if (!std::isfinite(*fixed[i]) || *fixed[i] < 0) {
            std::ostringstream os;
            os << "FitProblem: fixed " << names[i] << " must be >= 0";
            throw_invalid(os.str());
        }
    }
    const int nf = free_count();
    if (nf == 0)
        throw_invalid("FitProblem: all parameters fixed, nothing to fit");
    if (points < 10u * static_cast<unsigned>(nf)) {
        std::ostringstream os;
        os << "FitProblem: " << points << " data points cannot constrain "
           << nf << " free parameters, need at least " << 10 * nf;
        throw_invalid(os.str());
    }
    if (!std::isfinite(photon_scale) || !(photon_scale > 0) ||
        !std::isfinite(population_scale) || !(population_scale > 0))
        throw_invalid("FitProblem: detection scales must be positive");
    if (options.starts < 5)
        throw_invalid("FitProblem: need at least 5 multi-starts");
    if (options.max_evaluations < 50)
        throw_invalid("FitProblem: max_evaluations must be at least 50");
    if (!(options.rel_tol > 0) || !(options.abs_tol > 0))
        throw_invalid("FitProblem: tolerances must be positive");
}

std::vector<double> forward_model(const SuperatomParams& params, TraceKind kind,
                                  const PulseSpec& pulse,
                                  std::span<const double> times_us,
                                  double detection_scale,
                                  const EvolveOptions& opt) {
    params.validate();
    if (times_us.empty()) throw_invalid("forward_model: empty time grid");
    for (double t : times_us)
        if (!std::isfinite(t))
            throw_invalid("forward_model: non-finite sample time");
    for (std::size_t i = 1; i < times_us.size(); ++i)
        if (!(times_us[i] > times_us[i - 1]))
            throw_invalid("forward_model: times must increase strictly");
    if (!std::isfinite(detection_scale) || !(detection_scale > 0))
        throw_invalid("forward_model: detection_scale must be positive");

    // evolve() needs the grid to reach back to the pulse onset; splice the
    // onset in when the first sample lands later and drop it afterwards.
    std::vector<double> grid;
    grid.reserve(times_us.size() + 1);
    const bool prepend = times_us.front() > pulse.support_begin();
    if (prepend) grid.push_back(pulse.support_begin());
    grid.insert(grid.end(), times_us.begin(), times_us.end());

    const Trajectory traj = evolve(params, pulse, grid, opt);
    const ObservableTrace obs = observables(traj, params, pulse);
    const std::vector<double>& src = kind == TraceKind::photon_rate
                                         ? obs.out_rate
                                         : obs.rydberg_population;
    std::vector<double> out(src.begin() + (prepend ? 1 : 0), src.end());
    for (double& v : out) v *= detection_scale;
    return out;
}

namespace {

// Traces produced by the same pulse on the same grid share one evolution
// per objective call.
struct TraceGroup {
    const PulseSpec* pulse = nullptr;
    const std::vector<double>* times = nullptr;
    std::vector<double> grid;  // onset spliced in when needed
    std::size_t offset = 0;    // grid index of the first sample
    std::vector<std::size_t> members;
};

std::vector<TraceGroup> group_traces(const std::vector<TraceData>& traces) {
    std::vector<TraceGroup> groups;
    for (std::size_t i = 0; i < traces.size(); ++i) {
        const TraceData& t = traces[i];
        TraceGroup* hit = nullptr;
        for (TraceGroup& g : groups) {
            if (*g.pulse == t.pulse && *g.times == t.times_us) {
                hit = &g;
                break;
            }
        }
        if (!hit) {
            TraceGroup g;
            g.pulse = &t.pulse;
            g.times = &t.times_us;
            const bool prepend =
                t.times_us.front() > t.pulse.support_begin();
            if (prepend) g.grid.push_back(t.pulse.support_begin());
            g.grid.insert(g.grid.end(), t.times_us.begin(), t.times_us.end());
            g.offset = prepend ? 1 : 0;
            groups.push_back(std::move(g));
            hit = &groups.back();
        }
        hit->members.push_back(i);
    }
    return groups;
}

class Objective {
public:
    explicit Objective(const FitProblem& prob)
        : prob_(prob), groups_(group_traces(prob.traces)) {
        for (int i = 0; i < 3; ++i) {
            if (prob.free[i]) {
                map_[dim_] = i;
                log_lo_[dim_] = std::log(prob.free[i]->lower);
                log_hi_[dim_] = std::log(prob.free[i]->upper);
                ++dim_;
            } else {
                base_[i] = *prob.fixed[i];
            }
        }
        opt_.rel_tol = prob.options.rel_tol;
        opt_.abs_tol = prob.options.abs_tol;
    }

    int dim() const { return dim_; }
    double log_lo(int k) const { return log_lo_[k]; }
    double log_hi(int k) const { return log_hi_[k]; }
    long long evaluations() const { return evals_; }

    SuperatomParams unpack(std::span<const double> xlog) const {
        double v[3] = {base_[0], base_[1], base_[2]};
        for (int k = 0; k < dim_; ++k) v[map_[k]] = std::exp(xlog[k]);
        return SuperatomParams{v[0], v[1], v[2]};
    }

    bool in_bounds(std::span<const double> xlog) const {
        for (int k = 0; k < dim_; ++k)
            if (xlog[k] < log_lo_[k] || xlog[k] > log_hi_[k]) return false;
        return true;
    }

    // chi2 at physical parameters; every call runs the grouped evolutions.
    double chi2(const SuperatomParams& p,
                std::vector<std::vector<double>>* residuals = nullptr) const {
        ++evals_;
        if (residuals) residuals->assign(prob_.traces.size(), {});
        double total = 0.0;
        for (const TraceGroup& g : groups_) {
            const Trajectory traj = evolve(p, *g.pulse, g.grid, opt_);
            const ObservableTrace obs = observables(traj, p, *g.pulse);
            for (std::size_t ti : g.members) {
                const TraceData& t = prob_.traces[ti];
                const bool photon = t.kind == TraceKind::photon_rate;
                const std::vector<double>& src =
                    photon ? obs.out_rate : obs.rydberg_population;
                const double scale =
                    photon ? prob_.photon_scale : prob_.population_scale;
                std::vector<double>* res =
                    residuals ? &(*residuals)[ti] : nullptr;
                if (res) res->reserve(t.times_us.size());
                for (std::size_t i = 0; i < t.times_us.size(); ++i) {
                    const double r =
                        (t.values[i] - scale * src[i + g.offset]) / t.sem[i];
                    total += r * r;
                    if (res) res->push_back(r);
                }
            }
        }
        return total;
    }

    // kInf outside the bounds (without spending an evaluation) and for
    // non-finite model values, so the simplex backs away on its own.
    double operator()(std::span<const double> xlog) const {
        if (!in_bounds(xlog)) return kInf;
        const double f = chi2(unpack(xlog));
        return std::isfinite(f) ? f : kInf;
    }

private:
    const FitProblem& prob_;
    std::vector<TraceGroup> groups_;
    int dim_ = 0;
    int map_[3] = {0, 0, 0};
    double base_[3] = {0.0, 0.0, 0.0};
    double log_lo_[3] = {0.0, 0.0, 0.0};
    double log_hi_[3] = {0.0, 0.0, 0.0};
    EvolveOptions opt_;
    mutable long long evals_ = 0;
};

struct SimplexOutcome {
    std::vector<double> x;
    double f = kInf;
    bool converged = false;
};

// Nelder-Mead over log-parameters with standard coefficients.  Converged
// once an accepted iteration improves the best value by < 1e-8 relative
// while the vertex spread is < 1e-6 in every coordinate.
SimplexOutcome nelder_mead(const Objective& obj, std::span<const double> x0,
                           int max_evals) {
    const int d = obj.dim();
    const long long start_evals = obj.evaluations();
    const auto used = [&] { return obj.evaluations() - start_evals; };

    std::vector<std::vector<double>> v(d + 1,
                                       std::vector<double>(x0.begin(),
                                                           x0.end()));
    for (int i = 0; i < d; ++i) {
        // step toward the interior so no initial vertex starts out of bounds
        double& c = v[i + 1][i];
        c += (c + 0.25 <= obj.log_hi(i)) ? 0.25 : -0.25;
    }
    std::vector<double> f(d + 1);
    for (int i = 0; i <= d; ++i) f[i] = obj(v[i]);

    std::vector<int> order(d + 1);
    std::vector<double> centroid(d), xr(d), xx(d);
    double prev_best = kInf;
    bool converged = false;

    for (;;) {
        for (int i = 0; i <= d; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](int a, int b) { return f[a] < f[b]; });
        const int best = order[0], worst = order[d];

        double diameter = 0.0;
        for (int i = 0; i <= d; ++i)
            for (int k = 0; k < d; ++k)
                diameter = std::max(diameter,
                                    std::abs(v[i][k] - v[best][k]));
        const double impr = prev_best - f[best];
        if (std::isfinite(f[best]) &&
            impr < 1e-8 * std::max(prev_best, 1e-300) && diameter < 1e-6) {
            converged = true;
            break;
        }
        prev_best = f[best];
        if (used() >= max_evals) break;

        for (int k = 0; k < d; ++k) {
            double s = 0.0;
            for (int i = 0; i < d; ++i) s += v[order[i]][k];
            centroid[k] = s / d;
        }
        for (int k = 0; k < d; ++k)
            xr[k] = centroid[k] + (centroid[k] - v[worst][k]);
        const double fr = obj(xr);

        if (fr < f[best]) {
            for (int k = 0; k < d; ++k)
                xx[k] = centroid[k] + 2.0 * (centroid[k] - v[worst][k]);
            const double fe = obj(xx);
            if (fe < fr) {
                v[worst] = xx;
                f[worst] = fe;
            } else {
                v[worst] = xr;
                f[worst] = fr;
            }
        } else if (fr < f[order[d - 1]]) {
            v[worst] = xr;
            f[worst] = fr;
        } else if (fr < f[worst]) {
            for (int k = 0; k < d; ++k)
                xx[k] = centroid[k] + 0.5 * (xr[k] - centroid[k]);
            const double fc = obj(xx);
            if (fc <= fr) {
                v[worst] = xx;
                f[worst] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    const int j = order[i];
                    for (int k = 0; k < d; ++k)
                        v[j][k] = v[best][k] + 0.5 * (v[j][k] - v[best][k]);
                    f[j] = obj(v[j]);
                }
            }
        } else {
            for (int k = 0; k < d; ++k)
                xx[k] = centroid[k] - 0.5 * (centroid[k] - v[worst][k]);
            const double fc = obj(xx);
            if (fc < f[worst]) {
                v[worst] = xx;
                f[worst] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    const int j = order[i];
                    for (int k = 0; k < d; ++k)
                        v[j][k] = v[best][k] + 0.5 * (v[j][k] - v[best][k]);
                    f[j] = obj(v[j]);
                }
            }
        }
    }

    int best = 0;
    for (int i = 1; i <= d; ++i)
        if (f[i] < f[best]) best = i;
    return SimplexOutcome{v[best], f[best], converged};
}

}  // namespace

FitResult fit(const FitProblem& problem) {
    problem.validate();
    const Objective obj(problem);
    const int d = obj.dim();

    // All starts are drawn up front so the draw sequence never depends on
    // how long each optimization runs.
    std::mt19937_64 rng(problem.options.seed);
    std::vector<std::vector<double>> starts(
        static_cast<std::size_t>(problem.options.starts),
        std::vector<double>(d));
    for (auto& s : starts)
        for (int k = 0; k < d; ++k) {
            std::uniform_real_distribution<double> u(obj.log_lo(k),
                                                     obj.log_hi(k));
            s[k] = u(rng);
        }

    FitResult out;
    out.start_objectives.reserve(starts.size());
    SimplexOutcome best;
    for (const auto& s : starts) {
        out.start_objectives.push_back(obj(s));
        SimplexOutcome o =
            nelder_mead(obj, s, problem.options.max_evaluations);
        if (o.f < best.f) best = o;
    }
    if (!std::isfinite(best.f))
        throw_numerical("fit: no start produced a finite objective");

    out.params = obj.unpack(best.x);
    out.converged = best.converged;
    out.chi2 = obj.chi2(out.params, &out.per_trace_residuals);

    std::size_t points = 0;
    for (const auto& t : problem.traces) points += t.times_us.size();
    out.dof = static_cast<int>(points) - d;

    // Curvature of chi2 in physical parameter space by central differences;
    // the covariance of a least-squares estimate is twice its inverse.
    double pv[3] = {out.params.kappa, out.params.gamma, out.params.gamma_d};
    int map[3] = {0, 0, 0};
    {
        int k = 0;
        for (int i = 0; i < 3; ++i)
            if (problem.free[i]) map[k++] = i;
    }
    const auto chi2_at = [&](const double* vals) {
        return obj.chi2(SuperatomParams{vals[0], vals[1], vals[2]});
    };
    Eigen::MatrixXd hess(d, d);
    double h[3];
    for (int k = 0; k < d; ++k) h[k] = 1e-4 * pv[map[k]];
    const double f0 = out.chi2;
    for (int k = 0; k < d; ++k) {
        double p[3] = {pv[0], pv[1], pv[2]};
        p[map[k]] = pv[map[k]] + h[k];
        const double fp = chi2_at(p);
        p[map[k]] = pv[map[k]] - h[k];
        const double fm = chi2_at(p);
        hess(k, k) = (fp - 2.0 * f0 + fm) / (h[k] * h[k]);
        for (int l = k + 1; l < d; ++l) {
            double q[3] = {pv[0], pv[1], pv[2]};
            q[map[k]] = pv[map[k]] + h[k];
            q[map[l]] = pv[map[l]] + h[l];
            const double fpp = chi2_at(q);
            q[map[l]] = pv[map[l]] - h[l];
            const double fpm = chi2_at(q);
            q[map[k]] = pv[map[k]] - h[k];
            const double fmm = chi2_at(q);
            q[map[l]] = pv[map[l]] + h[l];
            const double fmp = chi2_at(q);
            hess(k, l) = hess(l, k) =
                (fpp - fpm - fmp + fmm) / (4.0 * h[k] * h[l]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hess);
    const double max_eig = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() > 1e-12 * std::max(max_eig, 1e-300)) {
        const Eigen::MatrixXd cov_free =
            2.0 * es.eigenvectors() *
            es.eigenvalues().cwiseInverse().asDiagonal() *
            es.eigenvectors().transpose();
        if (cov_free.allFinite()) {
            for (int k = 0; k < d; ++k)
                for (int l = 0; l < d; ++l)
                    out.covariance(map[k], map[l]) = cov_free(k, l);
            out.covariance_ok = true;
        }
    }

    out.evaluations = obj.evaluations();
    return out;
}

}  // namespace superatom
