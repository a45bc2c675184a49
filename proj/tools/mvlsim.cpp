// mvlsim: command-line front end for the quaternary decoder simulator.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mvlsim/cli.hpp"

namespace {

using mvlsim::cli::RunConfig;

// Numeric flags accept SPICE suffixes, so "--hold 5n" works.
struct NumericFlags {
    std::string vdd, hold, slew, load, dt, from, to;
};

void add_common(CLI::App* cmd, RunConfig& cfg, NumericFlags& nf, bool physics) {
    cmd->add_option("--out", cfg.out_dir, "Output directory (default $MVLSIM_OUT or ./mvlsim_out)");
    cmd->add_option("--format", cfg.format, "Stdout format: table, csv or json");
    if (!physics) return;
    cmd->add_option("--tech", cfg.tech, "Technology preset (cmos32, gnrfet32) or .model file");
    cmd->add_option("--vdd", nf.vdd, "Supply voltage");
    cmd->add_option("--hold", nf.hold, "Hold time per input level");
    cmd->add_option("--slew", nf.slew, "Input transition time");
    cmd->add_option("--load", nf.load, "Output load capacitance");
    cmd->add_option("--dt", nf.dt, "Transient step");
}

void apply(const NumericFlags& nf, RunConfig& cfg) {
    auto num = [](const std::string& s, double& dst) {
        if (s.empty()) return;
        const auto v = mvlsim::detail::parse_number(s);
        if (!v) throw mvlsim::InvalidArgument("bad number '" + s + "'");
        dst = *v;
    };
    num(nf.vdd, cfg.vdd);
    num(nf.hold, cfg.hold);
    num(nf.slew, cfg.slew);
    num(nf.load, cfg.load);
    num(nf.from, cfg.sweep.from);
    num(nf.to, cfg.sweep.to);
    if (!nf.dt.empty()) {
        double dt = 0.0;
        num(nf.dt, dt);
        cfg.dt = dt;
    }
}

}  // namespace

int main(int argc, char** argv) {
    namespace cli = mvlsim::cli;
    CLI::App app{"Multi-valued logic circuit simulator"};
    app.require_subcommand(1);
    RunConfig cfg;
    NumericFlags nf;

    auto* run = app.add_subcommand("run", "Simulate a netlist file");
    run->add_option("netlist", cfg.inputs, "Netlist file")->required();
    add_common(run, cfg, nf, true);

    auto* decoder = app.add_subcommand("decoder", "Quaternary decoder staircase experiment");
    add_common(decoder, cfg, nf, true);

    auto* compare = app.add_subcommand("compare", "Decoder experiment on cmos32 and gnrfet32");
    add_common(compare, cfg, nf, true);

    auto* sweep = app.add_subcommand("sweep", "Sweep one decoder parameter");
    sweep->add_option("param", cfg.sweep.param, "vdd, load, hold or vth_scale")->required();
    sweep->add_option("--from", nf.from, "First value")->required();
    sweep->add_option("--to", nf.to, "Last value");
    sweep->add_option("--count", cfg.sweep.count, "Number of runs");
    add_common(sweep, cfg, nf, true);

    auto* generate = app.add_subcommand("generate", "Write a cell netlist");
    generate->add_option("cell", cfg.cell, "vlc1 vlc2 vlc3 inverter xor2 decoder testbench")->required();
    add_common(generate, cfg, nf, true);

    auto* dump = app.add_subcommand("dump-models", "Print preset model cards");
    dump->add_option("names", cfg.inputs, "Preset names");

    app.add_subcommand("truth-table", "Print the ideal decode table");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::Error& e) {
        app.exit(e);
        return cli::kParseError;
    }
    try {
        apply(nf, cfg);
        if (nf.to.empty()) cfg.sweep.to = cfg.sweep.from;
    } catch (const mvlsim::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return cli::kParseError;
    }

    auto& out = std::cout;
    auto& err = std::cerr;
    if (*run) return cli::cmd_run(cfg.inputs.front(), cfg, out, err);
    if (*decoder) return cli::cmd_decoder(cfg, out, err);
    if (*compare) return cli::cmd_compare(cfg, out, err);
    if (*sweep) return cli::cmd_sweep(cfg, out, err);
    if (*generate) return cli::cmd_generate(cfg, out, err);
    if (*dump) return cli::cmd_dump_models(cfg, out, err);
    return cli::cmd_truth_table(out);
}
