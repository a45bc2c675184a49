#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mvlsim/device_models.hpp"
#include "mvlsim/error.hpp"
#include "mvlsim/linear_solver.hpp"
#include "mvlsim/netlist.hpp"
#include "mvlsim/parser.hpp"
#include "mvlsim/waveform.hpp"

namespace mvlsim {

struct SolveOptions {
    double abstol = 1e-9;   // A
    double reltol = 1e-4;
    double vtol = 1e-6;     // V
    int max_newton_iters = 100;
    double gmin = 1e-12;    // S
    int gmin_steps = 10;
    IntegrationRule rule = IntegrationRule::BackwardEuler;
};

inline void validate(const SolveOptions& o) {
    if (!(o.abstol > 0.0) || !(o.reltol > 0.0) || !(o.vtol > 0.0) || o.max_newton_iters <= 0 ||
        !(o.gmin > 0.0) || o.gmin_steps <= 0)
        throw InvalidArgument("solve options must all be strictly positive");
}

/// Linearized MNA system at one Newton iterate: solving matrix * x = rhs gives
/// the next iterate. Unknowns are the non-ground node voltages followed by one
/// branch current per voltage source.
struct MnaSystem {
    DenseMatrix matrix;
    std::vector<double> rhs;
    std::vector<std::string> unknowns;
    std::size_t node_unknowns = 0;
};

inline std::vector<double> solve_linear(const MnaSystem& system) {
    return solve_linear(system.matrix, system.rhs);
}

/// Circuit with resolved indices. Node index 0 is ground; unknown row = index - 1.
class CompiledCircuit {
public:
    struct Resistor {
        std::size_t a, b;
        double g;
    };
    struct Capacitor {
        std::size_t a, b;
        double c;
    };
    struct Source {
        std::size_t p, n;
        Stimulus stimulus;
        std::string name;
    };
    struct Fet {
        std::size_t d, g, s;
        FetModelCard card;
    };

    explicit CompiledCircuit(const Netlist& netlist) {
        validate(netlist);
        node_names_ = netlist.nodes;
        auto idx = [&](const std::string& name) { return *netlist.node_index(name); };
        std::vector<bool> gmin_node(node_names_.size(), false);
        for (const auto& d : netlist.devices) {
            const auto& t = d.terminals;
            switch (d.kind) {
                case DeviceKind::Resistor:
                    resistors_.push_back({idx(t[0]), idx(t[1]), 1.0 / d.param("r")});
                    break;
                case DeviceKind::Capacitor:
                    if (d.param("c") > 0.0) capacitors_.push_back({idx(t[0]), idx(t[1]), d.param("c")});
                    break;
                case DeviceKind::VoltageSource:
                    sources_.push_back({idx(t[0]), idx(t[1]), *d.stimulus, d.name});
                    break;
                case DeviceKind::Fet: {
                    FetModelCard card = netlist.models.at(*d.model);
                    card.k *= d.param("m", 1.0);
                    Fet f{idx(t[0]), idx(t[1]), idx(t[2]), card};
                    if (card.cg > 0.0) capacitors_.push_back({f.g, f.s, card.cg});
                    if (card.cd > 0.0) capacitors_.push_back({f.d, 0, card.cd});
                    gmin_node[f.d] = true;
                    gmin_node[f.s] = true;
                    fets_.push_back(f);
                    break;
                }
            }
        }
        for (std::size_t n = 1; n < gmin_node.size(); ++n)
            if (gmin_node[n]) gmin_nodes_.push_back(n);
    }

    [[nodiscard]] std::size_t node_count() const noexcept { return node_names_.size(); }
    [[nodiscard]] std::size_t dimension() const noexcept { return node_count() - 1 + sources_.size(); }
    [[nodiscard]] bool linear() const noexcept { return fets_.empty(); }
    [[nodiscard]] const std::vector<std::string>& node_names() const noexcept { return node_names_; }
    [[nodiscard]] const std::vector<Resistor>& resistors() const noexcept { return resistors_; }
    [[nodiscard]] const std::vector<Capacitor>& capacitors() const noexcept { return capacitors_; }
    [[nodiscard]] const std::vector<Source>& sources() const noexcept { return sources_; }
    [[nodiscard]] const std::vector<Fet>& fets() const noexcept { return fets_; }
    [[nodiscard]] const std::vector<std::size_t>& gmin_nodes() const noexcept { return gmin_nodes_; }

    [[nodiscard]] std::string unknown_name(std::size_t row) const {
        if (row + 1 < node_count()) return node_names_[row + 1];
        const std::size_t s = row + 1 - node_count();
        return s < sources_.size() ? "i(" + sources_[s].name + ")" : "?";
    }

private:
    std::vector<std::string> node_names_;
    std::vector<Resistor> resistors_;
    std::vector<Capacitor> capacitors_;
    std::vector<Source> sources_;
    std::vector<Fet> fets_;
    std::vector<std::size_t> gmin_nodes_;
};

namespace detail {

/// Jacobian, residual (sum of currents leaving each node; constraint error on
/// source rows) and per-row current scale at one iterate.
struct Linearization {
    DenseMatrix jacobian;
    std::vector<double> residual;
    std::vector<double> scale;
};

struct StampContext {
    double time = 0.0;
    const std::vector<Companion>* companions = nullptr;  // null: capacitors open (DC)
    double shunt_all = 0.0;                              // gmin-stepping shunt on every node
    double gmin = 0.0;
};

class Assembler {
public:
    explicit Assembler(const CompiledCircuit& c)
        : c_(c), n_(c.dimension()), lin_{DenseMatrix(n_), std::vector<double>(n_), std::vector<double>(n_)} {}

    const Linearization& linearize(const std::vector<double>& x, const StampContext& ctx) {
        lin_.jacobian.fill(0.0);
        std::fill(lin_.residual.begin(), lin_.residual.end(), 0.0);
        std::fill(lin_.scale.begin(), lin_.scale.end(), 0.0);
        auto v = [&](std::size_t node) { return node == 0 ? 0.0 : x[node - 1]; };

        for (const auto& r : c_.resistors()) two_terminal(r.a, r.b, r.g, r.g * (v(r.a) - v(r.b)));
        if (ctx.companions) {
            const auto& comp = *ctx.companions;
            for (std::size_t j = 0; j < c_.capacitors().size(); ++j) {
                const auto& cap = c_.capacitors()[j];
                two_terminal(cap.a, cap.b, comp[j].geq, comp[j].current(v(cap.a) - v(cap.b)));
            }
        }
        for (std::size_t node : c_.gmin_nodes()) two_terminal(node, 0, ctx.gmin, ctx.gmin * v(node));
        if (ctx.shunt_all > 0.0)
            for (std::size_t node = 1; node < c_.node_count(); ++node)
                two_terminal(node, 0, ctx.shunt_all, ctx.shunt_all * v(node));

        for (const auto& f : c_.fets()) {
            const double vs = v(f.s);
            const auto op = fet_eval(f.card, v(f.g) - vs, v(f.d) - vs);
            const double abs_id = std::abs(op.id);
            if (f.d) {
                const std::size_t r = f.d - 1;
                lin_.residual[r] += op.id;
                lin_.scale[r] = std::max(lin_.scale[r], abs_id);
                add(r, f.g, op.gm);
                add(r, f.d, op.gds);
                add(r, f.s, -op.gm - op.gds);
            }
            if (f.s) {
                const std::size_t r = f.s - 1;
                lin_.residual[r] -= op.id;
                lin_.scale[r] = std::max(lin_.scale[r], abs_id);
                add(r, f.g, -op.gm);
                add(r, f.d, -op.gds);
                add(r, f.s, op.gm + op.gds);
            }
        }

        const std::size_t base = c_.node_count() - 1;
        for (std::size_t k = 0; k < c_.sources().size(); ++k) {
            const auto& s = c_.sources()[k];
            const std::size_t br = base + k;
            const double ib = x[br];
            if (s.p) {
                lin_.residual[s.p - 1] += ib;
                lin_.scale[s.p - 1] = std::max(lin_.scale[s.p - 1], std::abs(ib));
                lin_.jacobian(s.p - 1, br) += 1.0;
                lin_.jacobian(br, s.p - 1) += 1.0;
            }
            if (s.n) {
                lin_.residual[s.n - 1] -= ib;
                lin_.scale[s.n - 1] = std::max(lin_.scale[s.n - 1], std::abs(ib));
                lin_.jacobian(s.n - 1, br) -= 1.0;
                lin_.jacobian(br, s.n - 1) -= 1.0;
            }
            lin_.residual[br] = v(s.p) - v(s.n) - stimulus_value(s.stimulus, ctx.time);
        }
        return lin_;
    }

private:
    void add(std::size_t row, std::size_t node, double g) {
        if (node) lin_.jacobian(row, node - 1) += g;
    }

    // Current i = g * (va - vb) + const, leaving node a.
    void two_terminal(std::size_t a, std::size_t b, double g, double i) {
        const double mag = std::abs(i);
        if (a) {
            lin_.residual[a - 1] += i;
            lin_.scale[a - 1] = std::max(lin_.scale[a - 1], mag);
            add(a - 1, a, g);
            add(a - 1, b, -g);
        }
        if (b) {
            lin_.residual[b - 1] -= i;
            lin_.scale[b - 1] = std::max(lin_.scale[b - 1], mag);
            add(b - 1, a, -g);
            add(b - 1, b, g);
        }
    }

    const CompiledCircuit& c_;
    std::size_t n_;
    Linearization lin_;
};

struct NewtonOutcome {
    std::vector<double> x;
    int iterations = 0;
    double worst_ratio = 0.0;  // max |residual| / tolerance at the accepted point
};

struct ResidualCheck {
    bool ok = true;
    double worst_ratio = 0.0;
    std::size_t worst_row = 0;
};

inline ResidualCheck check_residual(const CompiledCircuit& c, const Linearization& lin,
                                    const SolveOptions& opts) {
    ResidualCheck out;
    const std::size_t nodes = c.node_count() - 1;
    for (std::size_t r = 0; r < lin.residual.size(); ++r) {
        const double tol = r < nodes ? opts.abstol + opts.reltol * lin.scale[r] : opts.vtol;
        const double ratio = std::abs(lin.residual[r]) / tol;
        if (ratio > out.worst_ratio) {
            out.worst_ratio = ratio;
            out.worst_row = r;
        }
        if (!(ratio <= 1.0)) out.ok = false;
    }
    return out;
}

inline double max_source_magnitude(const CompiledCircuit& c) {
    double vmax = 0.0;
    for (const auto& s : c.sources()) {
        if (const auto* dc = std::get_if<DcStimulus>(&s.stimulus)) vmax = std::max(vmax, std::abs(dc->level));
        if (const auto* pwl = std::get_if<PwlStimulus>(&s.stimulus))
            for (const auto& [t, val] : pwl->points) vmax = std::max(vmax, std::abs(val));
        if (const auto* p = std::get_if<PulseStimulus>(&s.stimulus))
            vmax = std::max({vmax, std::abs(p->v1), std::abs(p->v2)});
    }
    return vmax;
}

inline NewtonOutcome newton(const CompiledCircuit& c, Assembler& assembler, std::vector<double> x,
                            const StampContext& ctx, const SolveOptions& opts) {
    const std::size_t nodes = c.node_count() - 1;
    // Nonlinear iterates are limited per node; no node moves by more than this.
    const double step_limit = std::max(0.5, 0.5 * max_source_magnitude(c));
    bool last_step_small = false;
    ResidualCheck check;
    for (int iter = 0; iter <= opts.max_newton_iters; ++iter) {
        const auto& lin = assembler.linearize(x, ctx);
        check = check_residual(c, lin, opts);
        if (check.ok && iter > 0 && (last_step_small || c.linear()))
            return {std::move(x), iter, check.worst_ratio};
        if (iter == opts.max_newton_iters) break;

        std::vector<double> rhs(lin.residual.size());
        for (std::size_t r = 0; r < rhs.size(); ++r) rhs[r] = -lin.residual[r];
        std::vector<double> delta;
        try {
            delta = solve_linear(lin.jacobian, rhs);
        } catch (const SingularMatrix& e) {
            // At the seed the matrix reflects topology; later it only reflects a bad iterate.
            if (iter > 0) break;
            throw SingularMatrix(e.pivot(), "singular matrix at pivot " + std::to_string(e.pivot()) +
                                                " (unknown " + c.unknown_name(e.pivot()) + ")");
        }
        last_step_small = true;
        bool finite = true;
        for (std::size_t r = 0; r < x.size(); ++r) {
            double d = delta[r];
            if (r < nodes && !c.linear()) d = std::clamp(d, -step_limit, step_limit);
            x[r] += d;
            if (!std::isfinite(x[r])) finite = false;
            const double tol = r < nodes ? opts.vtol : opts.abstol + opts.reltol * std::abs(x[r]);
            if (!(std::abs(d) <= tol)) last_step_small = false;
        }
        if (!finite) break;
    }
    const auto node = c.unknown_name(check.worst_row);
    std::ostringstream msg;
    msg << "Newton failed to converge at t=" << ctx.time << " s (worst residual at " << node << ")";
    throw NonConvergence(ctx.time, node, msg.str());
}

}  // namespace detail

/// Result of a DC operating point solve.
struct DcSolution {
    std::vector<std::string> node_names;  // non-ground nodes, netlist order
    std::vector<double> node_voltages;
    std::vector<std::string> source_names;
    std::vector<double> source_currents;  // into the + terminal
    std::vector<double> unknowns;
    int iterations = 0;
    bool used_gmin_stepping = false;

    [[nodiscard]] double voltage(std::string_view node) const {
        const auto key = canonical_node(node);
        if (key == "0") return 0.0;
        for (std::size_t i = 0; i < node_names.size(); ++i)
            if (node_names[i] == key) return node_voltages[i];
        throw InvalidArgument("unknown node '" + std::string(node) + "'");
    }
};

namespace detail {

inline DcSolution package(const CompiledCircuit& c, std::vector<double> x, int iterations, bool stepped) {
    DcSolution sol;
    const std::size_t nodes = c.node_count() - 1;
    sol.node_names.assign(c.node_names().begin() + 1, c.node_names().end());
    sol.node_voltages.assign(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(nodes));
    for (std::size_t k = 0; k < c.sources().size(); ++k) {
        sol.source_names.push_back(c.sources()[k].name);
        sol.source_currents.push_back(x[nodes + k]);
    }
    sol.unknowns = std::move(x);
    sol.iterations = iterations;
    sol.used_gmin_stepping = stepped;
    return sol;
}

inline DcSolution dc_solve(const CompiledCircuit& c, const SolveOptions& opts, double time) {
    Assembler assembler(c);
    StampContext ctx;
    ctx.time = time;
    ctx.gmin = opts.gmin;
    std::vector<double> x(c.dimension(), 0.0);
    try {
        auto out = newton(c, assembler, x, ctx, opts);
        return package(c, std::move(out.x), out.iterations, false);
    } catch (const NonConvergence&) {
    }
    int total = 0;
    for (int s = 0; s <= opts.gmin_steps; ++s) {
        ctx.shunt_all = opts.gmin * std::pow(10.0, opts.gmin_steps - s);
        auto out = newton(c, assembler, x, ctx, opts);
        x = std::move(out.x);
        total += out.iterations;
    }
    ctx.shunt_all = 0.0;
    auto out = newton(c, assembler, x, ctx, opts);
    return package(c, std::move(out.x), total + out.iterations, true);
}

}  // namespace detail

/// DC operating point with capacitors open and stimuli evaluated at t = 0.
/// Falls back to gmin stepping when plain Newton does not converge.
inline DcSolution dc_operating_point(const Netlist& netlist, const SolveOptions& opts = {}) {
    validate(opts);
    CompiledCircuit c(netlist);
    return detail::dc_solve(c, opts, 0.0);
}

/// Linearized MNA system of the DC problem at iterate `x` (zeros when empty).
inline MnaSystem assemble_mna(const Netlist& netlist, std::vector<double> x = {},
                              const SolveOptions& opts = {}) {
    CompiledCircuit c(netlist);
    if (x.empty()) x.assign(c.dimension(), 0.0);
    if (x.size() != c.dimension()) throw InvalidArgument("assemble_mna: iterate has wrong size");
    detail::Assembler assembler(c);
    detail::StampContext ctx;
    ctx.gmin = opts.gmin;
    const auto& lin = assembler.linearize(x, ctx);
    MnaSystem sys{lin.jacobian, lin.jacobian.multiply(x), {}, c.node_count() - 1};
    for (std::size_t r = 0; r < sys.rhs.size(); ++r) sys.rhs[r] -= lin.residual[r];
    for (std::size_t r = 0; r < c.dimension(); ++r) sys.unknowns.push_back(c.unknown_name(r));
    return sys;
}

struct TransientStats {
    long newton_iterations = 0;
    double worst_kcl_ratio = 0.0;  // max over accepted points of |residual| / tolerance
    double step = 0.0;             // effective fixed step
    bool operator==(const TransientStats&) const = default;
};

/// Node voltages and source branch currents on a shared time axis.
struct WaveformSet {
    std::vector<double> time;
    std::vector<std::string> node_names;
    std::vector<std::vector<double>> node_voltages;  // [node][sample]
    std::vector<std::string> source_names;
    std::vector<std::vector<double>> source_currents;  // into the + terminal
    TransientStats stats;

    bool operator==(const WaveformSet&) const = default;

    [[nodiscard]] Waveform voltage(std::string_view node) const {
        const auto key = canonical_node(node);
        if (key == "0") return Waveform(time, std::vector<double>(time.size(), 0.0));
        for (std::size_t i = 0; i < node_names.size(); ++i)
            if (node_names[i] == key) return Waveform(time, node_voltages[i]);
        throw InvalidArgument("unknown node '" + std::string(node) + "'");
    }

    [[nodiscard]] Waveform current(std::string_view source) const {
        const auto key = to_lower(source);
        for (std::size_t i = 0; i < source_names.size(); ++i)
            if (to_lower(source_names[i]) == key) return Waveform(time, source_currents[i]);
        throw InvalidArgument("unknown voltage source '" + std::string(source) + "'");
    }
};

/// CSV with header `time,<node1>,...`; numbers in shortest round-trip form.
inline std::string to_csv(const WaveformSet& ws) {
    std::string out = "time";
    for (const auto& n : ws.node_names) out += "," + n;
    out += '\n';
    for (std::size_t k = 0; k < ws.time.size(); ++k) {
        out += format_number(ws.time[k]);
        for (const auto& col : ws.node_voltages) {
            out += ',';
            out += format_number(col[k]);
        }
        out += '\n';
    }
    return out;
}

/// Effective fixed step: the requested dt capped by tstop/1000, dtmax and a tenth
/// of the fastest source edge.
inline double effective_step(const Netlist& netlist, const TransientAnalysis& tran) {
    double dt = std::min(tran.dt, tran.tstop / 1000.0);
    if (tran.dtmax) dt = std::min(dt, *tran.dtmax);
    for (const auto& d : netlist.devices)
        if (d.stimulus) dt = std::min(dt, shortest_edge(*d.stimulus) / 10.0);
    return dt;
}

/// Accepted time points: the uniform grid k*dt plus every source corner time.
inline std::vector<double> time_axis(const Netlist& netlist, const TransientAnalysis& tran, double dt) {
    std::vector<double> corners{tran.tstop};
    for (const auto& d : netlist.devices)
        if (d.stimulus)
            for (double t : stimulus_breakpoints(*d.stimulus, tran.tstop))
                if (t > 0.0) corners.push_back(t);
    std::sort(corners.begin(), corners.end());
    const double eps = dt * 1e-6;
    std::vector<double> axis{0.0};
    for (double t : corners)
        if (t - axis.back() > eps) axis.push_back(t);
    corners.assign(axis.begin() + 1, axis.end());

    std::vector<double> grid;
    const auto steps = static_cast<long>(std::ceil(tran.tstop / dt - 1e-9));
    for (long k = 1; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        auto it = std::lower_bound(corners.begin(), corners.end(), t);
        bool near = (it != corners.end() && *it - t <= eps) ||
                    (it != corners.begin() && t - *(it - 1) <= eps);
        if (!near) grid.push_back(t);
    }
    std::vector<double> merged;
    merged.reserve(axis.size() + grid.size());
    std::merge(axis.begin(), axis.end(), grid.begin(), grid.end(), std::back_inserter(merged));
    return merged;
}

/// Fixed-step transient run, seeded by the t = 0 operating point.
inline WaveformSet transient(const Netlist& netlist, const TransientAnalysis& tran,
                             const SolveOptions& opts = {}) {
    validate(opts);
    validate(tran);
    CompiledCircuit c(netlist);
    const double dt = effective_step(netlist, tran);
    const auto axis = time_axis(netlist, tran, dt);

    auto dc = detail::dc_solve(c, opts, 0.0);
    std::vector<double> x = dc.unknowns;
    const std::size_t nodes = c.node_count() - 1;

    WaveformSet ws;
    ws.node_names.assign(c.node_names().begin() + 1, c.node_names().end());
    ws.node_voltages.assign(nodes, {});
    for (const auto& s : c.sources()) ws.source_names.push_back(s.name);
    ws.source_currents.assign(c.sources().size(), {});
    for (auto& col : ws.node_voltages) col.reserve(axis.size());
    for (auto& col : ws.source_currents) col.reserve(axis.size());
    ws.stats.step = dt;
    auto record = [&](double t) {
        ws.time.push_back(t);
        for (std::size_t r = 0; r < nodes; ++r) ws.node_voltages[r].push_back(x[r]);
        for (std::size_t k = 0; k < c.sources().size(); ++k) ws.source_currents[k].push_back(x[nodes + k]);
    };
    record(0.0);

    auto v = [&](std::size_t node) { return node == 0 ? 0.0 : x[node - 1]; };
    const auto& caps = c.capacitors();
    std::vector<double> v_prev(caps.size()), i_prev(caps.size(), 0.0);
    for (std::size_t j = 0; j < caps.size(); ++j) v_prev[j] = v(caps[j].a) - v(caps[j].b);
    std::vector<Companion> companions(caps.size());

    detail::Assembler assembler(c);
    detail::StampContext ctx;
    ctx.gmin = opts.gmin;
    ctx.companions = &companions;
    for (std::size_t n = 1; n < axis.size(); ++n) {
        const double h = axis[n] - axis[n - 1];
        for (std::size_t j = 0; j < caps.size(); ++j)
            companions[j] = capacitor_companion(caps[j].c, h, v_prev[j], i_prev[j], opts.rule);
        ctx.time = axis[n];
        auto out = detail::newton(c, assembler, x, ctx, opts);
        x = std::move(out.x);
        ws.stats.newton_iterations += out.iterations;
        ws.stats.worst_kcl_ratio = std::max(ws.stats.worst_kcl_ratio, out.worst_ratio);
        for (std::size_t j = 0; j < caps.size(); ++j) {
            const double vb = v(caps[j].a) - v(caps[j].b);
            i_prev[j] = companions[j].current(vb);
            v_prev[j] = vb;
        }
        record(axis[n]);
    }
    return ws;
}

}  // namespace mvlsim
