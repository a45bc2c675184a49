#pragma once

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "mvlsim/error.hpp"
#include "mvlsim/netlist.hpp"

// Netlist text format (line oriented):
//
//   <title line>
//   * comment
//   Vname n+ n- DC <v> | PWL(t1 v1 t2 v2 ...) | PULSE(v1 v2 td tr tf pw per)
//   Rname n1 n2 <ohms>
//   Cname n1 n2 <farads>
//   Mname nd ng ns nb <model> [m=<mult>]
//   + continuation of the previous line
//   .model <name> NFET|PFET vth=<v> k=<a_per_v2> [lambda=<per_v>] [cg=<F>] [cd=<F>]
//   .tran <dt> <tstop> [<dtmax>]
//   .op
//   .measure <name> RISE|FALL <node> <v_lo> <v_hi>
//   .measure <name> DELAY <in> <out> <v_mid_in> <v_mid_out>
//   .measure <name> POWER <vsource>
//   .end
//
// Numbers accept the suffixes f p n u m k meg g (case-insensitive).

namespace mvlsim {

namespace detail {

struct Token {
    std::string text;
    std::size_t line = 0;
    std::size_t column = 0;
};

struct LogicalLine {
    std::vector<Token> tokens;
};

inline bool is_separator(char c) { return c == '(' || c == ')' || c == '=' || c == ','; }
inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

inline void tokenize_into(std::string_view text, std::size_t line, std::size_t first_col,
                          std::vector<Token>& out) {
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (is_space(c) || c == ',') {
            ++i;
            continue;
        }
        if (is_separator(c)) {
            out.push_back({std::string(1, c), line, first_col + i});
            ++i;
            continue;
        }
        const std::size_t start = i;
        while (i < text.size() && !is_space(text[i]) && !is_separator(text[i])) ++i;
        out.push_back({std::string(text.substr(start, i - start)), line, first_col + start});
    }
}

[[noreturn]] inline void fail(const Token& tok, const std::string& msg) {
    throw ParseError(tok.line, tok.column, msg);
}

/// Exact suffix expansion: the suffix becomes a decimal exponent before the
/// string is converted, so "10f" yields the double nearest to 1e-14.
inline std::optional<double> parse_number(std::string_view s) {
    std::size_t i = 0;
    std::string mantissa;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) mantissa += s[i++];
    bool digits = false;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
        mantissa += s[i++];
        digits = true;
    }
    if (i < s.size() && s[i] == '.') {
        mantissa += s[i++];
        while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) {
            mantissa += s[i++];
            digits = true;
        }
    }
    if (!digits) return std::nullopt;
    long exponent = 0;
    if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
        std::size_t j = i + 1;
        bool neg = false;
        if (j < s.size() && (s[j] == '+' || s[j] == '-')) neg = s[j++] == '-';
        std::size_t exp_start = j;
        long value = 0;
        while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) {
            if (value > 100000) return std::nullopt;
            value = value * 10 + (s[j++] - '0');
        }
        if (j == exp_start) return std::nullopt;
        exponent = neg ? -value : value;
        i = j;
    }
    const std::string suffix = to_lower(s.substr(i));
    static constexpr std::pair<std::string_view, int> kSuffixes[] = {
        {"", 0}, {"f", -15}, {"p", -12}, {"n", -9}, {"u", -6},
        {"m", -3}, {"k", 3}, {"meg", 6}, {"g", 9}};
    bool matched = false;
    for (const auto& [name, shift] : kSuffixes) {
        if (suffix == name) {
            exponent += shift;
            matched = true;
            break;
        }
    }
    if (!matched) return std::nullopt;
    const std::string literal = mantissa + "e" + std::to_string(exponent);
    double value = 0.0;
    const char* begin = literal.data();
    if (*begin == '+') ++begin;
    auto [ptr, ec] = std::from_chars(begin, literal.data() + literal.size(), value);
    if (ec != std::errc() || ptr != literal.data() + literal.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

inline double number(const Token& tok) {
    auto v = parse_number(tok.text);
    if (!v) fail(tok, "malformed number '" + tok.text + "'");
    return *v;
}

class LineCursor {
public:
    explicit LineCursor(const LogicalLine& line) : tokens_(line.tokens) {}

    [[nodiscard]] bool done() const { return pos_ >= tokens_.size(); }
    [[nodiscard]] const Token& peek() const { return tokens_[pos_]; }
    const Token& next(const char* what) {
        if (done()) fail(tokens_.back(), std::string("expected ") + what);
        return tokens_[pos_++];
    }
    const Token& word(const char* what) {
        const auto& t = next(what);
        if (t.text.size() == 1 && is_separator(t.text[0]))
            fail(t, std::string("expected ") + what + ", found '" + t.text + "'");
        return t;
    }
    double value(const char* what) { return number(word(what)); }
    bool accept(char c) {
        if (!done() && peek().text.size() == 1 && peek().text[0] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c) {
        const auto& t = next((std::string("'") + c + "'").c_str());
        if (t.text.size() != 1 || t.text[0] != c) fail(t, std::string("expected '") + c + "'");
    }
    void end() {
        if (!done()) fail(peek(), "unexpected token '" + peek().text + "'");
    }

private:
    const std::vector<Token>& tokens_;
    std::size_t pos_ = 0;
};

struct PendingReference {
    Token where;
    std::string name;
};

inline Stimulus parse_stimulus(LineCursor& cur) {
    const auto& kind_tok = cur.word("source value (DC, PWL or PULSE)");
    const auto kind = to_lower(kind_tok.text);
    Stimulus stimulus;
    if (kind == "dc") {
        stimulus = DcStimulus{cur.value("DC level")};
    } else if (kind == "pwl") {
        const bool paren = cur.accept('(');
        PwlStimulus pwl;
        while (!cur.done() && !(paren && cur.peek().text == ")")) {
            const auto& t_tok = cur.word("PWL time");
            const double t = number(t_tok);
            const double v = cur.value("PWL voltage");
            if (pwl.points.empty() ? t < 0.0 : !(t > pwl.points.back().first))
                fail(t_tok, "PWL times must be >= 0 and strictly increasing");
            pwl.points.emplace_back(t, v);
        }
        if (paren) cur.expect(')');
        if (pwl.points.empty()) fail(kind_tok, "PWL needs at least one point");
        stimulus = std::move(pwl);
    } else if (kind == "pulse") {
        const bool paren = cur.accept('(');
        PulseStimulus p;
        p.v1 = cur.value("PULSE v1");
        p.v2 = cur.value("PULSE v2");
        p.delay = cur.value("PULSE delay");
        p.rise = cur.value("PULSE rise");
        p.fall = cur.value("PULSE fall");
        p.width = cur.value("PULSE width");
        p.period = cur.value("PULSE period");
        if (paren) cur.expect(')');
        if (!(p.rise > 0.0) || !(p.fall > 0.0) || !(p.width > 0.0) || !(p.period > 0.0) ||
            p.delay < 0.0)
            fail(kind_tok, "PULSE needs rise, fall, width, period > 0 and delay >= 0");
        stimulus = p;
    } else {
        fail(kind_tok, "unknown source value '" + kind_tok.text + "'");
    }
    return stimulus;
}

inline FetModelCard parse_model_params(LineCursor& cur, Polarity polarity, const Token& where) {
    FetModelCard card;
    card.polarity = polarity;
    bool have_vth = false;
    bool have_k = false;
    const bool paren = cur.accept('(');
    while (!cur.done() && !(paren && cur.peek().text == ")")) {
        const auto& key_tok = cur.word("model parameter");
        cur.expect('=');
        const double v = cur.value("parameter value");
        const auto key = to_lower(key_tok.text);
        if (key == "vth") {
            card.vth = v;
            have_vth = true;
        } else if (key == "k") {
            card.k = v;
            have_k = true;
        } else if (key == "lambda") {
            card.lambda = v;
        } else if (key == "cg") {
            card.cg = v;
        } else if (key == "cd") {
            card.cd = v;
        } else {
            fail(key_tok, "unknown model parameter '" + key_tok.text + "'");
        }
    }
    if (paren) cur.expect(')');
    if (!have_vth || !have_k) fail(where, ".model requires vth= and k=");
    try {
        validate(card);
    } catch (const InvalidArgument& e) {
        fail(where, e.what());
    }
    return card;
}

}  // namespace detail

/// Parses netlist text. Throws ParseError (with line and column) on any syntax
/// or validation problem; never throws anything else.
inline Netlist parse(std::string_view text) {
    using namespace detail;

    // Split into physical lines, then fold continuations into logical lines.
    std::vector<std::string_view> physical;
    for (std::size_t start = 0; start <= text.size();) {
        auto nl = text.find('\n', start);
        if (nl == std::string_view::npos) nl = text.size();
        physical.push_back(text.substr(start, nl - start));
        start = nl + 1;
        if (nl == text.size()) break;
    }
    if (text.empty()) throw ParseError(1, 1, "empty netlist (missing title line)");

    Netlist netlist;
    {
        auto title = physical.front();
        while (!title.empty() && is_space(title.back())) title.remove_suffix(1);
        while (!title.empty() && is_space(title.front())) title.remove_prefix(1);
        netlist.title = std::string(title);
    }

    std::vector<LogicalLine> lines;
    for (std::size_t n = 1; n < physical.size(); ++n) {
        const auto raw = physical[n];
        std::size_t first = 0;
        while (first < raw.size() && is_space(raw[first])) ++first;
        if (first == raw.size()) continue;
        if (raw[first] == '*') continue;
        if (raw[first] == '+') {
            if (lines.empty()) throw ParseError(n + 1, first + 1, "continuation without a line");
            tokenize_into(raw.substr(first + 1), n + 1, first + 2, lines.back().tokens);
            continue;
        }
        LogicalLine ll;
        tokenize_into(raw, n + 1, 1, ll.tokens);
        lines.push_back(std::move(ll));
    }

    std::vector<PendingReference> model_refs;
    std::vector<PendingReference> node_refs;
    std::vector<PendingReference> source_refs;
    std::vector<std::pair<Token, std::string>> names;

    for (const auto& line : lines) {
        if (line.tokens.empty()) continue;
        LineCursor cur(line);
        const Token head = cur.next("element");
        if (head.text.size() == 1 && is_separator(head.text[0]))
            fail(head, "unexpected '" + head.text + "'");
        const auto lower = to_lower(head.text);

        if (lower[0] == '.') {
            if (lower == ".end") break;
            if (lower == ".op") {
                cur.end();
                netlist.analyses.emplace_back(OperatingPointAnalysis{});
            } else if (lower == ".tran") {
                TransientAnalysis tran;
                const auto& dt_tok = cur.word("tran step");
                tran.dt = number(dt_tok);
                tran.tstop = cur.value("tran stop time");
                if (!cur.done()) tran.dtmax = cur.value("tran max step");
                cur.end();
                try {
                    validate(tran);
                } catch (const InvalidArgument& e) {
                    fail(dt_tok, e.what());
                }
                netlist.analyses.emplace_back(tran);
            } else if (lower == ".model") {
                const auto& name_tok = cur.word("model name");
                const auto& type_tok = cur.word("model type");
                const auto type = to_lower(type_tok.text);
                Polarity pol;
                if (type == "nfet" || type == "nmos") pol = Polarity::N;
                else if (type == "pfet" || type == "pmos") pol = Polarity::P;
                else fail(type_tok, "model type must be NFET or PFET");
                auto card = parse_model_params(cur, pol, name_tok);
                cur.end();
                const auto key = to_lower(name_tok.text);
                if (netlist.models.count(key)) fail(name_tok, "duplicate model '" + name_tok.text + "'");
                netlist.models.emplace(key, card);
            } else if (lower == ".measure" || lower == ".meas") {
                MeasureDirective m;
                m.name = cur.word("measure name").text;
                const auto& kind_tok = cur.word("measure kind");
                const auto kind = to_lower(kind_tok.text);
                auto node = [&](const char* what) {
                    const auto& t = cur.word(what);
                    node_refs.push_back({t, canonical_node(t.text)});
                    m.targets.push_back(canonical_node(t.text));
                };
                if (kind == "rise" || kind == "fall") {
                    m.kind = kind == "rise" ? MeasureKind::Rise : MeasureKind::Fall;
                    node("measured node");
                    m.levels.push_back(cur.value("low level"));
                    m.levels.push_back(cur.value("high level"));
                } else if (kind == "delay") {
                    m.kind = MeasureKind::Delay;
                    node("input node");
                    node("output node");
                    m.levels.push_back(cur.value("input mid level"));
                    m.levels.push_back(cur.value("output mid level"));
                } else if (kind == "power") {
                    m.kind = MeasureKind::Power;
                    const auto& t = cur.word("voltage source");
                    source_refs.push_back({t, to_lower(t.text)});
                    m.targets.push_back(t.text);
                } else {
                    fail(kind_tok, "measure kind must be RISE, FALL, DELAY or POWER");
                }
                cur.end();
                netlist.measures.push_back(std::move(m));
            } else {
                fail(head, "unsupported card '" + head.text + "'");
            }
            continue;
        }

        Device dev;
        dev.name = head.text;
        switch (lower[0]) {
            case 'v': dev.kind = DeviceKind::VoltageSource; break;
            case 'r': dev.kind = DeviceKind::Resistor; break;
            case 'c': dev.kind = DeviceKind::Capacitor; break;
            case 'm': dev.kind = DeviceKind::Fet; break;
            default: fail(head, "unsupported element '" + head.text + "'");
        }
        for (std::size_t t = 0; t < terminal_count(dev.kind); ++t)
            dev.terminals.push_back(canonical_node(cur.word("node").text));
        switch (dev.kind) {
            case DeviceKind::Resistor: {
                const auto& tok = cur.word("resistance");
                const double r = number(tok);
                if (!(r > 0.0)) fail(tok, "resistance must be > 0");
                dev.params["r"] = r;
                break;
            }
            case DeviceKind::Capacitor: {
                const auto& tok = cur.word("capacitance");
                const double c = number(tok);
                if (!(c >= 0.0)) fail(tok, "capacitance must be >= 0");
                dev.params["c"] = c;
                break;
            }
            case DeviceKind::VoltageSource:
                dev.stimulus = parse_stimulus(cur);
                break;
            case DeviceKind::Fet: {
                const auto& model_tok = cur.word("model name");
                dev.model = to_lower(model_tok.text);
                model_refs.push_back({model_tok, *dev.model});
                dev.params["m"] = 1.0;
                while (!cur.done()) {
                    const auto& key = cur.word("device parameter");
                    if (to_lower(key.text) != "m") fail(key, "unknown FET parameter '" + key.text + "'");
                    cur.expect('=');
                    const auto& vtok = cur.word("multiplier");
                    const double m = number(vtok);
                    if (!(m > 0.0)) fail(vtok, "multiplier must be > 0");
                    dev.params["m"] = m;
                }
                break;
            }
        }
        cur.end();
        const auto key = to_lower(dev.name);
        for (const auto& [tok, existing] : names)
            if (existing == key) fail(head, "duplicate device name '" + dev.name + "'");
        names.emplace_back(head, key);
        netlist.add_device(std::move(dev));
    }

    for (const auto& ref : model_refs)
        if (!netlist.models.count(ref.name)) fail(ref.where, "undeclared model '" + ref.where.text + "'");
    for (const auto& ref : node_refs)
        if (!netlist.node_index(ref.name)) fail(ref.where, "undeclared node '" + ref.where.text + "'");
    for (const auto& ref : source_refs) {
        const auto* d = netlist.find_device(ref.name);
        if (!d || d->kind != DeviceKind::VoltageSource)
            fail(ref.where, "undeclared voltage source '" + ref.where.text + "'");
    }
    return netlist;
}

/// Shortest decimal text that parses back to exactly `v`.
inline std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string emit(const Netlist& netlist) {
    std::ostringstream out;
    out << netlist.title << '\n';
    for (const auto& d : netlist.devices) {
        out << d.name;
        for (const auto& t : d.terminals) out << ' ' << t;
        switch (d.kind) {
            case DeviceKind::Resistor: out << ' ' << format_number(d.param("r")); break;
            case DeviceKind::Capacitor: out << ' ' << format_number(d.param("c")); break;
            case DeviceKind::Fet: {
                out << ' ' << *d.model;
                const double m = d.param("m", 1.0);
                if (m != 1.0) out << " m=" << format_number(m);
                break;
            }
            case DeviceKind::VoltageSource: {
                const auto& s = *d.stimulus;
                if (const auto* dc = std::get_if<DcStimulus>(&s)) {
                    out << " DC " << format_number(dc->level);
                } else if (const auto* pwl = std::get_if<PwlStimulus>(&s)) {
                    out << " PWL(";
                    for (std::size_t j = 0; j < pwl->points.size(); ++j)
                        out << (j ? " " : "") << format_number(pwl->points[j].first) << ' '
                            << format_number(pwl->points[j].second);
                    out << ')';
                } else {
                    const auto& p = std::get<PulseStimulus>(s);
                    out << " PULSE(" << format_number(p.v1) << ' ' << format_number(p.v2) << ' '
                        << format_number(p.delay) << ' ' << format_number(p.rise) << ' '
                        << format_number(p.fall) << ' ' << format_number(p.width) << ' '
                        << format_number(p.period) << ')';
                }
                break;
            }
        }
        out << '\n';
    }
    for (const auto& [name, card] : netlist.models) {
        out << ".model " << name << (card.polarity == Polarity::N ? " NFET" : " PFET")
            << " vth=" << format_number(card.vth) << " k=" << format_number(card.k)
            << " lambda=" << format_number(card.lambda) << " cg=" << format_number(card.cg)
            << " cd=" << format_number(card.cd) << '\n';
    }
    for (const auto& a : netlist.analyses) {
        if (std::holds_alternative<OperatingPointAnalysis>(a)) {
            out << ".op\n";
        } else {
            const auto& tr = std::get<TransientAnalysis>(a);
            out << ".tran " << format_number(tr.dt) << ' ' << format_number(tr.tstop);
            if (tr.dtmax) out << ' ' << format_number(*tr.dtmax);
            out << '\n';
        }
    }
    for (const auto& m : netlist.measures) {
        static constexpr const char* kKinds[] = {"RISE", "FALL", "DELAY", "POWER"};
        out << ".measure " << m.name << ' ' << kKinds[static_cast<int>(m.kind)];
        for (const auto& t : m.targets) out << ' ' << t;
        for (double v : m.levels) out << ' ' << format_number(v);
        out << '\n';
    }
    out << ".end\n";
    return out.str();
}

}  // namespace mvlsim
