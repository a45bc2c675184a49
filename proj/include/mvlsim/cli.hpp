#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <iterator>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "mvlsim/circuit_library.hpp"
#include "mvlsim/experiment.hpp"
#include "mvlsim/measurement.hpp"
#include "mvlsim/mvl.hpp"
#include "mvlsim/parser.hpp"
#include "mvlsim/sim_engine.hpp"

namespace mvlsim::cli {

/// Process exit codes; disjoint so scripts can tell failures apart.
enum ExitCode : int {
    kOk = 0,
    kParseError = 1,     // bad netlist, bad flag value, unknown technology or parameter
    kConvergence = 2,    // Newton non-convergence or singular matrix
    kIoError = 3,        // unreadable input or unwritable output
    kLogicMismatch = 4,  // decoder outputs disagree with the ideal decode
};

class IoError : public Error {
public:
    using Error::Error;
};

struct SweepSpec {
    std::string param;
    double from = 0.0;
    double to = 0.0;
    int count = 1;
};

struct RunConfig {
    std::vector<std::string> inputs;
    std::string tech = "cmos32";
    double vdd = 1.2;
    double hold = 5e-9;
    double slew = 0.1e-9;
    double load = 1e-15;
    std::optional<double> dt;
    double vth_scale = 1.0;
    std::string out_dir = default_out_dir();
    std::string format = "table";  // csv | json | table
    SweepSpec sweep;
    std::string cell;

    static std::string default_out_dir() {
        const char* env = std::getenv("MVLSIM_OUT");
        return env && *env ? std::string(env) : std::string("mvlsim_out");
    }
};

inline void validate(const RunConfig& cfg) {
    if (!(cfg.vdd > 0.0)) throw InvalidArgument("--vdd must be > 0");
    if (!(cfg.slew > 0.0) || !(cfg.hold > cfg.slew)) throw InvalidArgument("need --hold > --slew > 0");
    if (!(cfg.load >= 0.0)) throw InvalidArgument("--load must be >= 0");
    if (cfg.dt && !(*cfg.dt > 0.0)) throw InvalidArgument("--dt must be > 0");
    if (!(cfg.vth_scale > 0.0)) throw InvalidArgument("vth scale must be > 0");
    if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "table")
        throw InvalidArgument("--format must be csv, json or table");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read '" + path + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("error reading '" + path + "'");
    return text;
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path.string() + "'");
    out << content;
    out.flush();
    if (!out) throw IoError("error writing '" + path.string() + "'");
}

/// A preset name, or a file holding one NFET and one PFET `.model` card.
inline TechnologyCard resolve_technology(const std::string& name) {
    for (auto p : kPresetNames)
        if (name == p) return preset(name);
    if (!std::filesystem::is_regular_file(name))
        throw InvalidArgument("unknown technology '" + name + "' (not a preset or a model file)");
    const auto netlist = parse("models\n" + read_file(name));
    std::optional<FetModelCard> n, p;
    for (const auto& [model_name, card] : netlist.models) {
        auto& slot = card.polarity == Polarity::N ? n : p;
        if (slot) throw InvalidArgument(name + ": expected exactly one NFET and one PFET model");
        slot = card;
    }
    if (!n || !p) throw InvalidArgument(name + ": expected exactly one NFET and one PFET model");
    TechnologyCard tech;
    tech.name = std::filesystem::path(name).stem().string();
    tech.nfet = *n;
    tech.pfet = *p;
    tech.note = "user model file " + name;
    return tech;
}

inline CellSpec decoder_spec(const RunConfig& cfg, const TechnologyCard& tech) {
    CellSpec spec;
    spec.kind = CellKind::Decoder;
    spec.tech = tech;
    spec.map = LevelMap(4, cfg.vdd);
    spec.load = cfg.load;
    spec.vth_scale = cfg.vth_scale;
    return spec;
}

inline StaircaseTiming decoder_timing(const RunConfig& cfg) {
    return {cfg.hold, cfg.slew, cfg.dt.value_or(0.0)};
}

/// Runs `body`, mapping library errors to exit codes with a diagnostic on `err`.
template <typename Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParseError;
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << '\n';
        return kParseError;
    } catch (const NonConvergence& e) {
        err << "error: " << e.what() << '\n';
        return kConvergence;
    } catch (const SingularMatrix& e) {
        err << "error: " << e.what() << '\n';
        return kConvergence;
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    } catch (const MeasurementError& e) {
        err << "error: " << e.what() << '\n';
        return kLogicMismatch;
    }
}

inline nlohmann::json config_json(const RunConfig& cfg) {
    nlohmann::json j = {{"tech", cfg.tech}, {"vdd", cfg.vdd},   {"hold", cfg.hold},
                        {"slew", cfg.slew}, {"load", cfg.load}, {"vth_scale", cfg.vth_scale}};
    j["dt"] = cfg.dt ? nlohmann::json(*cfg.dt) : nlohmann::json(nullptr);
    return j;
}

inline void print_report(std::ostream& out, const RunConfig& cfg, const MeasureReport& report,
                         const nlohmann::json& doc) {
    if (cfg.format == "json") {
        out << doc.dump(2) << '\n';
    } else if (cfg.format == "csv") {
        out << "technology,max_power,avg_power,rise_time,fall_time,prop_delay,pdp,edp\n"
            << report.technology << ',' << format_number(report.max_power) << ','
            << format_number(report.avg_power) << ',' << format_number(report.rise_time) << ','
            << format_number(report.fall_time) << ',' << format_number(report.prop_delay) << ','
            << format_number(report.pdp) << ',' << format_number(report.edp) << '\n';
    } else {
        out << report_table({report});
    }
}

/// `run <netlist>`: executes the analyses, writes <out>/<name>.csv and <out>/<name>.json.
inline int cmd_run(const std::string& path, const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        validate(cfg);
        const auto text = read_file(path);
        Netlist netlist;
        try {
            netlist = parse(text);
        } catch (const ParseError& e) {
            err << "error: " << path << ':' << e.what() << '\n';
            return static_cast<int>(kParseError);
        }
        const auto stem = std::filesystem::path(path).stem().string();
        const std::filesystem::path dir(cfg.out_dir);

        nlohmann::json doc;
        doc["title"] = netlist.title;
        doc["netlist"] = stem;
        const auto* tran = netlist.transient();
        bool want_op = !tran;
        for (const auto& a : netlist.analyses)
            if (std::holds_alternative<OperatingPointAnalysis>(a)) want_op = true;
        SolveOptions opts;
        if (want_op) {
            const auto dc = dc_operating_point(netlist, opts);
            nlohmann::json op = nlohmann::json::object();
            for (std::size_t i = 0; i < dc.node_names.size(); ++i) op[dc.node_names[i]] = dc.node_voltages[i];
            for (std::size_t i = 0; i < dc.source_names.size(); ++i)
                op["i(" + dc.source_names[i] + ")"] = dc.source_currents[i];
            doc["operating_point"] = op;
            if (!tran) {
                std::string csv = "time";
                for (const auto& n : dc.node_names) csv += "," + n;
                csv += "\n0";
                for (double v : dc.node_voltages) csv += "," + format_number(v);
                csv += '\n';
                write_file(dir / (stem + ".csv"), csv);
            }
        }
        std::optional<MeasureReport> report;
        if (tran) {
            auto analysis = *tran;
            if (cfg.dt) analysis.dt = *cfg.dt;
            const auto waves = transient(netlist, analysis, opts);
            write_file(dir / (stem + ".csv"), to_csv(waves));
            std::map<std::string, std::string> errors;
            const auto values = evaluate_measures(netlist, waves, &errors);
            doc["measures"] = to_json(values);
            doc["measure_errors"] = errors;
            for (const auto& [name, why] : errors) err << "warning: measure " << name << ": " << why << '\n';
            report = report_from_measures(netlist.title, netlist, values);
            doc["step"] = waves.stats.step;
        }
        doc["report"] = report ? to_json(*report) : nlohmann::json(nullptr);
        write_file(dir / (stem + ".json"), doc.dump(2) + "\n");
        if (report) print_report(out, cfg, *report, doc);
        else if (cfg.format == "json") out << doc.dump(2) << '\n';
        return static_cast<int>(kOk);
    });
}

struct DecoderOutcome {
    int code = kOk;
    std::optional<DecoderRun> run;
};

inline DecoderOutcome decoder_outcome(const RunConfig& cfg, std::ostream& err) {
    DecoderOutcome outcome;
    outcome.code = guarded(err, [&] {
        validate(cfg);
        const auto tech = resolve_technology(cfg.tech);
        auto run = run_decoder(decoder_spec(cfg, tech), decoder_timing(cfg));
        const auto stem = "decoder_" + tech.name;
        const std::filesystem::path dir(cfg.out_dir);
        write_file(dir / (stem + ".csv"), to_csv(run.waves));
        write_file(dir / (stem + ".json"), to_json(run).dump(2) + "\n");
        int code = kOk;
        if (!run.logic_ok) {
            err << "error: " << tech.name << " decoder output disagrees with the ideal decode\n";
            code = kLogicMismatch;
        } else if (!run.report) {
            err << "error: " << tech.name << " decoder report incomplete:";
            for (const auto& [name, why] : run.measure_errors) err << ' ' << name << " (" << why << ')';
            err << '\n';
            code = kLogicMismatch;
        }
        outcome.run = std::move(run);
        return code;
    });
    return outcome;
}

/// `decoder`: staircase experiment on one technology.
inline int cmd_decoder(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    auto outcome = decoder_outcome(cfg, err);
    if (outcome.code == kOk) print_report(out, cfg, *outcome.run->report, to_json(*outcome.run));
    return outcome.code;
}

inline double improvement(double cmos, double gnr) { return (cmos - gnr) / cmos * 100.0; }

/// `compare`: the decoder experiment on cmos32 and gnrfet32 with identical settings.
inline int cmd_compare(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    RunConfig a = cfg, b = cfg;
    a.tech = "cmos32";
    b.tech = "gnrfet32";
    auto ra = decoder_outcome(a, err);
    if (ra.code != kOk) return ra.code;
    auto rb = decoder_outcome(b, err);
    if (rb.code != kOk) return rb.code;
    return guarded(err, [&] {
        const auto& ca = *ra.run->report;
        const auto& cb = *rb.run->report;
        const bool identical = ra.run->stimulus_fingerprint == rb.run->stimulus_fingerprint;
        nlohmann::json doc;
        doc["config"] = config_json(cfg);
        doc["reports"] = {to_json(ca), to_json(cb)};
        doc["stimulus_fingerprints"] = {{ca.technology, ra.run->stimulus_fingerprint},
                                        {cb.technology, rb.run->stimulus_fingerprint}};
        doc["stimuli_identical"] = identical;
        doc["improvement_percent"] = {{"power", improvement(ca.avg_power, cb.avg_power)},
                                      {"rise_time", improvement(ca.rise_time, cb.rise_time)},
                                      {"fall_time", improvement(ca.fall_time, cb.fall_time)},
                                      {"pdp", improvement(ca.pdp, cb.pdp)}};
        write_file(std::filesystem::path(cfg.out_dir) / "compare.json", doc.dump(2) + "\n");
        if (cfg.format == "json") {
            out << doc.dump(2) << '\n';
        } else {
            out << report_table({ca, cb});
            char line[160];
            auto emit_line = [&](double pct, const char* what) {
                std::snprintf(line, sizeof line, "%s: %.2f%% %s\n", cb.technology.c_str(), pct, what);
                out << line;
            };
            emit_line(improvement(ca.avg_power, cb.avg_power), "decrease in power");
            emit_line(improvement(ca.rise_time, cb.rise_time), "improvement in rise time");
            emit_line(improvement(ca.fall_time, cb.fall_time), "improvement in fall time");
            emit_line(improvement(ca.pdp, cb.pdp), "improvement in PDP");
            out << "stimuli identical: " << (identical ? "yes" : "no") << " (" << ra.run->stimulus_fingerprint
                << ")\n";
        }
        return static_cast<int>(identical ? kOk : kLogicMismatch);
    });
}

inline constexpr const char* kSweepParams[] = {"vdd", "load", "hold", "vth_scale"};

struct SweepRow {
    double param = 0.0;
    bool completed = false;  // simulation finished
    bool logic_ok = false;
    std::optional<MeasureReport> report;
    std::string error;
};

inline std::vector<double> sweep_values(const SweepSpec& s) {
    if (s.count < 1) throw InvalidArgument("sweep count must be >= 1");
    std::vector<double> v;
    for (int i = 0; i < s.count; ++i)
        v.push_back(s.count == 1 ? s.from : s.from + (s.to - s.from) * i / (s.count - 1));
    return v;
}

inline SweepRow sweep_point(RunConfig cfg, const TechnologyCard& tech, double value) {
    SweepRow row;
    row.param = value;
    const auto& p = cfg.sweep.param;
    if (p == "vdd") cfg.vdd = value;
    else if (p == "load") cfg.load = value;
    else if (p == "hold") cfg.hold = value;
    else cfg.vth_scale = value;
    try {
        validate(cfg);
        const auto run = run_decoder(decoder_spec(cfg, tech), decoder_timing(cfg));
        row.completed = true;
        row.logic_ok = run.logic_ok;
        row.report = run.report;
    } catch (const Error& e) {
        row.error = e.what();
    }
    return row;
}

inline std::string sweep_csv(const SweepSpec& spec, const std::vector<SweepRow>& rows) {
    std::string csv = "param,run,metric,value\n";
    const double nan = std::nan("");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        auto line = [&](const char* metric, double v) {
            csv += spec.param + "," + std::to_string(i) + "," + metric + "," + format_number(v) + "\n";
        };
        line(spec.param.c_str(), r.param);
        line("completed", r.completed ? 1.0 : 0.0);
        line("logic_ok", r.logic_ok ? 1.0 : 0.0);
        const auto* m = r.report ? &*r.report : nullptr;
        line("max_power", m ? m->max_power : nan);
        line("avg_power", m ? m->avg_power : nan);
        line("rise_time", m ? m->rise_time : nan);
        line("fall_time", m ? m->fall_time : nan);
        line("prop_delay", m ? m->prop_delay : nan);
        line("pdp", m ? m->pdp : nan);
        line("edp", m ? m->edp : nan);
    }
    return csv;
}

/// `sweep`: the decoder experiment over a linear sweep of one parameter. Runs
/// execute concurrently; rows are ordered by parameter index. Failed or
/// mismatched runs are flagged in the data instead of aborting the sweep.
inline int cmd_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err,
                     std::vector<SweepRow>* rows_out = nullptr) {
    return guarded(err, [&] {
        if (std::find(std::begin(kSweepParams), std::end(kSweepParams), cfg.sweep.param) ==
            std::end(kSweepParams))
            throw InvalidArgument("unknown sweep parameter '" + cfg.sweep.param + "'");
        if (cfg.format != "csv" && cfg.format != "json" && cfg.format != "table")
            throw InvalidArgument("--format must be csv, json or table");
        const auto values = sweep_values(cfg.sweep);
        const auto tech = resolve_technology(cfg.tech);
        std::vector<SweepRow> rows(values.size());
        const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
        for (std::size_t start = 0; start < values.size(); start += workers) {
            std::vector<std::future<SweepRow>> batch;
            for (std::size_t i = start; i < std::min(values.size(), start + workers); ++i)
                batch.push_back(std::async(std::launch::async, sweep_point, cfg, tech, values[i]));
            for (std::size_t i = 0; i < batch.size(); ++i) rows[start + i] = batch[i].get();
        }
        const auto csv = sweep_csv(cfg.sweep, rows);
        write_file(std::filesystem::path(cfg.out_dir) / ("sweep_" + cfg.sweep.param + ".csv"), csv);
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].error.empty()) err << "warning: run " << i << ": " << rows[i].error << '\n';
            else if (!rows[i].logic_ok) err << "warning: run " << i << ": logic mismatch\n";
        }
        if (cfg.format == "csv") {
            out << csv;
        } else {
            std::vector<MeasureReport> reports;
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const double nan = std::nan("");
                MeasureReport r = rows[i].report.value_or(MeasureReport{"", nan, nan, nan, nan, nan, nan, nan});
                r.technology = cfg.sweep.param + "=" + format_number(rows[i].param) +
                               (rows[i].logic_ok ? "" : " (mismatch)");
                reports.push_back(r);
            }
            out << report_table(reports);
        }
        if (rows_out) *rows_out = rows;
        return static_cast<int>(kOk);
    });
}

/// Stand-alone netlist for a named generator.
inline Netlist generate_cell(const std::string& cell, const RunConfig& cfg) {
    validate(cfg);
    const auto tech = resolve_technology(cfg.tech);
    CellSpec spec = decoder_spec(cfg, tech);
    const LevelMap& map = spec.map;
    auto with_tran = [&](Netlist n, double tstop) {
        TransientAnalysis tran;
        tran.tstop = tstop;
        tran.dt = cfg.dt.value_or(cfg.slew / 200.0);
        n.analyses.emplace_back(tran);
        return n;
    };
    const auto stair = staircase(map, cfg.hold, cfg.slew);
    const double tstop = map.radix() * cfg.hold;
    if (cell == "vlc1" || cell == "vlc2" || cell == "vlc3") {
        const int i = cell.back() - '1';
        spec.kind = CellKind::Vlc;
        spec.vlc_index = i;
        auto n = cell_netlist(build_vlc(i, spec), "VLC" + std::to_string(i + 1) + " (" + tech.name + ")", map,
                              {{"in", stair}});
        return with_tran(std::move(n), tstop);
    }
    if (cell == "inverter") {
        spec.kind = CellKind::Inverter;
        PwlStimulus in{{{0.0, 0.0}, {cfg.hold, 0.0}, {cfg.hold + cfg.slew, map.vdd()}, {2 * cfg.hold, map.vdd()}}};
        return with_tran(cell_netlist(build_inverter(spec), "inverter (" + tech.name + ")", map, {{"in", in}}),
                         2 * cfg.hold);
    }
    if (cell == "xor2") {
        spec.kind = CellKind::Xor2;
        const double v = map.vdd();
        auto square = [&](double period) {
            return PulseStimulus{0.0, v, period / 2, cfg.slew, cfg.slew, period / 2 - cfg.slew, period};
        };
        return with_tran(cell_netlist(build_xor2(spec), "xor2 (" + tech.name + ")", map,
                                      {{"a", square(2 * cfg.hold)}, {"b", square(4 * cfg.hold)}}),
                         4 * cfg.hold);
    }
    if (cell == "decoder") return build_decoder(spec);
    if (cell == "testbench") return build_staircase_testbench(spec, decoder_timing(cfg));
    throw InvalidArgument("unknown cell '" + cell + "' (vlc1 vlc2 vlc3 inverter xor2 decoder testbench)");
}

/// `generate <cell>`: writes <out>/<cell>.cir.
inline int cmd_generate(const RunConfig& cfg, std::ostream& /*out*/, std::ostream& err) {
    return guarded(err, [&] {
        const auto netlist = generate_cell(cfg.cell, cfg);
        const auto path = std::filesystem::path(cfg.out_dir) / (cfg.cell + ".cir");
        write_file(path, emit(netlist));
        err << "wrote " << path.string() << '\n';
        return static_cast<int>(kOk);
    });
}

/// `.model` lines for a technology card (NFET then PFET).
inline std::string model_lines(const TechnologyCard& tech) {
    std::string s = "* " + tech.name + ": " + tech.note + "\n";
    for (const auto* card : {&tech.nfet, &tech.pfet}) {
        s += ".model " + tech.name + (card->polarity == Polarity::N ? "_n NFET" : "_p PFET") +
             " vth=" + format_number(card->vth) + " k=" + format_number(card->k) +
             " lambda=" + format_number(card->lambda) + " cg=" + format_number(card->cg) +
             " cd=" + format_number(card->cd) + "\n";
    }
    return s;
}

/// `dump-models [names...]`: preset cards as `.model` lines (all presets by default).
inline int cmd_dump_models(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        std::vector<std::string> names = cfg.inputs;
        if (names.empty())
            for (auto p : kPresetNames) names.emplace_back(p);
        std::string text;
        for (const auto& n : names) text += model_lines(preset(n));
        out << text;
        return static_cast<int>(kOk);
    });
}

/// `truth-table`: ideal VLC and decode table as CSV.
inline int cmd_truth_table(std::ostream& out) {
    out << truth_table_csv();
    return kOk;
}

}  // namespace mvlsim::cli
