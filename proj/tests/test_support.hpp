#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "mvlsim/cli.hpp"

namespace mvlsim::support {

inline std::filesystem::path source_dir() { return MVLSIM_SOURCE_DIR; }

/// Fresh, empty scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mvlsim_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Random but valid netlist text exercising every element, card and stimulus form.
inline std::string random_netlist(std::mt19937_64& rng) {
    std::uniform_int_distribution<int> small(1, 6);
    std::uniform_real_distribution<double> mant(0.1, 999.0);
    const char* suffixes[] = {"", "f", "p", "n", "u", "m", "k", "meg", "g"};
    auto number = [&] {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g%s", mant(rng), suffixes[rng() % 9]);
        return std::string(buf);
    };
    auto node = [&] {
        static const char* names[] = {"0", "gnd", "a", "B", "out", "n_1", "Mid", "x9"};
        return std::string(names[rng() % 8]);
    };
    std::string s = "random netlist " + std::to_string(rng() % 1000) + "\nRfix a out 1k\n";
    std::vector<std::string> sources;
    const int count = small(rng) + 2;
    for (int i = 0; i < count; ++i) {
        switch (rng() % 4) {
            case 0: s += "R" + std::to_string(i) + " " + node() + " " + node() + " " + number() + "\n"; break;
            case 1: s += "C" + std::to_string(i) + " " + node() + " " + node() + " " + number() + "\n"; break;
            case 2: {
                std::string name = "V" + std::to_string(i);
                sources.push_back(name);
                s += name + " " + node() + " " + node();
                switch (rng() % 3) {
                    case 0: s += " DC " + number(); break;
                    case 1: {
                        s += " PWL(";
                        double t = 0.0;
                        const int n = small(rng);
                        for (int k = 0; k < n; ++k) {
                            t += mant(rng) * 1e-12;
                            char buf[64];
                            std::snprintf(buf, sizeof buf, "%s%.9g %.4g", k ? " " : "", t, mant(rng) / 100);
                            s += buf;
                        }
                        s += ")";
                        break;
                    }
                    default:
                        s += " PULSE(0 " + number() + " 1n 0.1n 0.2n 2n 5n)";
                }
                s += "\n";
                break;
            }
            default:
                s += "M" + std::to_string(i) + " " + node() + " " + node() + " " + node() + " " + node() +
                     (rng() % 2 ? " cardn" : " cardp m=" + number()) + "\n";
        }
    }
    s += ".model cardn NFET vth=0.3 k=" + number() + " lambda=0.05 cg=0.4f\n";
    s += ".model CardP pmos vth=-" + number() + " k=2e-5\n+ cd=1f\n";
    if (rng() % 2) s += ".op\n";
    s += ".tran 1p " + std::to_string(small(rng)) + "n" + (rng() % 2 ? " 5p" : "") + "\n";
    s += ".measure r1 RISE out 0 1.2\n.meas d1 DELAY a out 0.6 0.6\n";
    if (!sources.empty()) s += ".measure pw POWER " + sources.front() + "\n";
    s += ".end\n";
    return s;
}

/// Every netlist the project generates or ships, plus seeded random ones.
inline std::vector<std::pair<std::string, std::string>> netlist_corpus(int random_count = 200) {
    std::vector<std::pair<std::string, std::string>> corpus;
    for (const auto& entry : std::filesystem::directory_iterator(source_dir() / "netlists"))
        if (entry.path().extension() == ".cir")
            corpus.emplace_back(entry.path().filename().string(), cli::read_file(entry.path().string()));
    const char* cells[] = {"vlc1", "vlc2", "vlc3", "inverter", "xor2", "decoder", "testbench"};
    for (auto tech : kPresetNames) {
        for (const char* cell : cells) {
            for (double vdd : {1.2, 3.0}) {
                cli::RunConfig cfg;
                cfg.tech = std::string(tech);
                cfg.vdd = vdd;
                corpus.emplace_back(std::string(tech) + "/" + cell + "@" + std::to_string(vdd),
                                    emit(cli::generate_cell(cell, cfg)));
            }
        }
    }
    std::mt19937_64 rng(20261014);
    for (int i = 0; i < random_count; ++i) corpus.emplace_back("random" + std::to_string(i), random_netlist(rng));
    return corpus;
}

}  // namespace mvlsim::support
