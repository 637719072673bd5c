#include "sse/sequence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <sstream>

#include <nlohmann/json.hpp>

#include "sse/errors.hpp"
#include "sse/format.hpp"

namespace sse {

namespace {

double inferred_tau(const PulseSequence& seq) {
    if (seq.drives.size() >= 2) {
        auto sorted = seq.drives;
        std::sort(sorted.begin(), sorted.end(),
                  [](const DrivePulse& a, const DrivePulse& b) { return a.t_start < b.t_start; });
        return sorted[1].t_start - sorted[0].t_start;
    }
    return seq.total_duration / 2.0;
}

template <typename Event>
void check_overlaps(const std::vector<Event>& events, const char* channel) {
    auto sorted = events;
    std::sort(sorted.begin(), sorted.end(),
              [](const Event& a, const Event& b) { return a.t_start < b.t_start; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i].t_start < sorted[i - 1].t_end()) {
            std::ostringstream os;
            os << channel << " events overlap: [" << sorted[i - 1].t_start << ", "
               << sorted[i - 1].t_end() << "] and [" << sorted[i].t_start << ", "
               << sorted[i].t_end() << "]";
            throw SequenceError(os.str());
        }
    }
}

}  // namespace

void PulseSequence::validate() const {
    for (const auto& p : drives) {
        if (!(p.duration > 0.0)) throw SequenceError("pulse duration must be > 0");
        if (!(p.t_start >= 0.0)) throw SequenceError("pulse t_start must be >= 0");
        if (p.t_end() > total_duration + 1e-12)
            throw SequenceError("pulse ends after total duration");
    }
    for (const auto& w : detunes) {
        if (!(w.duration > 0.0)) throw SequenceError("detune duration must be > 0");
        if (!(w.t_start >= 0.0)) throw SequenceError("detune t_start must be >= 0");
        if (w.t_end() > total_duration + 1e-12)
            throw SequenceError("detune window ends after total duration");
    }
    check_overlaps(drives, "drive");
    check_overlaps(detunes, "detune");
    if (!(total_duration > 0.0)) throw SequenceError("total duration must be > 0");
    if (!(tau > 0.0)) throw SequenceError("tau must be > 0");
}

namespace {

struct LineCursor {
    std::string_view line;
    int line_no;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < line.size() && (line[pos] == ' ' || line[pos] == '\t')) ++pos;
    }
    bool at_end() {
        skip_ws();
        return pos >= line.size() || line[pos] == '#';
    }
    std::string_view token() {
        skip_ws();
        if (pos >= line.size() || line[pos] == '#')
            throw ParseError(line_no, static_cast<int>(pos) + 1, "unexpected end of line");
        std::size_t start = pos;
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
        return line.substr(start, pos - start);
    }
    double number(const char* what) {
        skip_ws();
        std::size_t col = pos + 1;
        std::string_view tok = token();
        double v;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc{} || res.ptr != tok.data() + tok.size())
            throw ParseError(line_no, static_cast<int>(col),
                             std::string("expected number for ") + what + ", got '" +
                                 std::string(tok) + "'");
        if (!std::isfinite(v))
            throw ParseError(line_no, static_cast<int>(col),
                             std::string("non-finite value for ") + what);
        return v;
    }
};

}  // namespace

PulseSequence parse_sequence(std::string_view text) {
    PulseSequence seq;
    bool saw_end = false;
    bool saw_tau = false;
    int line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line =
            text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        LineCursor cur{line, line_no};
        if (cur.at_end()) continue;
        if (saw_end) throw ParseError(line_no, 1, "content after 'end' line");

        std::string_view kw = cur.token();
        if (kw == "pulse") {
            DrivePulse p;
            p.t_start = cur.number("t_start_us");
            p.duration = cur.number("dur_us");
            p.amplitude_rel = cur.number("amp_rel");
            p.phase_deg = cur.number("phase_deg");
            if (!cur.at_end()) throw ParseError(line_no, static_cast<int>(cur.pos) + 1,
                                                "trailing tokens on pulse line");
            seq.drives.push_back(p);
        } else if (kw == "detune") {
            DetuneWindow w;
            w.t_start = cur.number("t_start_us");
            w.duration = cur.number("dur_us");
            w.delta_mhz = cur.number("delta_MHz");
            if (!cur.at_end()) throw ParseError(line_no, static_cast<int>(cur.pos) + 1,
                                                "trailing tokens on detune line");
            seq.detunes.push_back(w);
        } else if (kw == "tau") {
            seq.tau = cur.number("tau_us");
            saw_tau = true;
            if (!cur.at_end()) throw ParseError(line_no, static_cast<int>(cur.pos) + 1,
                                                "trailing tokens on tau line");
        } else if (kw == "end") {
            seq.total_duration = cur.number("total_us");
            if (!cur.at_end()) throw ParseError(line_no, static_cast<int>(cur.pos) + 1,
                                                "trailing tokens on end line");
            saw_end = true;
        } else {
            throw ParseError(line_no, 1, "unknown keyword '" + std::string(kw) + "'");
        }
    }
    if (!saw_end) throw ParseError(line_no, 1, "missing 'end' line");
    if (!saw_tau) seq.tau = inferred_tau(seq);
    seq.validate();
    return seq;
}

std::string serialize_sequence(const PulseSequence& seq) {
    seq.validate();
    std::string out;
    for (const auto& p : seq.drives) {
        out += "pulse " + fmt_double(p.t_start) + " " + fmt_double(p.duration) + " " +
               fmt_double(p.amplitude_rel) + " " + fmt_double(p.phase_deg) + "\n";
    }
    for (const auto& w : seq.detunes) {
        out += "detune " + fmt_double(w.t_start) + " " + fmt_double(w.duration) + " " +
               fmt_double(w.delta_mhz) + "\n";
    }
    // tau line only when it cannot be inferred from the pulses
    if (seq.tau != inferred_tau(seq)) out += "tau " + fmt_double(seq.tau) + "\n";
    out += "end " + fmt_double(seq.total_duration) + "\n";
    return out;
}

nlohmann::json sequence_to_json(const PulseSequence& seq) {
    seq.validate();
    nlohmann::json j;
    j["pulses"] = nlohmann::json::array();
    for (const auto& p : seq.drives) {
        j["pulses"].push_back({{"t_start_us", p.t_start},
                               {"dur_us", p.duration},
                               {"amp_rel", p.amplitude_rel},
                               {"phase_deg", p.phase_deg}});
    }
    j["detunes"] = nlohmann::json::array();
    for (const auto& w : seq.detunes) {
        j["detunes"].push_back(
            {{"t_start_us", w.t_start}, {"dur_us", w.duration}, {"delta_MHz", w.delta_mhz}});
    }
    j["tau_us"] = seq.tau;
    j["end_us"] = seq.total_duration;
    return j;
}

PulseSequence sequence_from_json(const nlohmann::json& j) {
    PulseSequence seq;
    try {
        for (const auto& pj : j.at("pulses")) {
            seq.drives.push_back({pj.at("t_start_us").get<double>(), pj.at("dur_us").get<double>(),
                                  pj.at("amp_rel").get<double>(),
                                  pj.at("phase_deg").get<double>()});
        }
        for (const auto& wj : j.at("detunes")) {
            seq.detunes.push_back({wj.at("t_start_us").get<double>(),
                                   wj.at("dur_us").get<double>(),
                                   wj.at("delta_MHz").get<double>()});
        }
        seq.total_duration = j.at("end_us").get<double>();
        seq.tau = j.contains("tau_us") ? j.at("tau_us").get<double>() : inferred_tau(seq);
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("sequence JSON: ") + e.what());
    }
    seq.validate();
    return seq;
}

PulseSequence make_preset(std::string_view name, const PresetParams& p) {
    if (!(p.tau > 0.0)) throw SequenceError("preset: tau must be > 0");
    PulseSequence seq;
    seq.tau = p.tau;
    seq.total_duration = (p.total_duration > 0.0) ? p.total_duration : 6.0 * p.tau + 10.0;
    seq.drives.push_back({0.0, p.pulse_duration, p.amp1, 0.0});
    seq.drives.push_back({p.tau, p.pulse_duration, p.amp2, 0.0});

    auto add_window = [&](double center) {
        DetuneWindow w;
        w.t_start = center - p.window_duration / 2.0 + p.window_offset;
        w.duration = p.window_duration;
        w.delta_mhz = p.detune_mhz;
        seq.detunes.push_back(w);
    };

    if (name == "fig1b") {
        // Window on echo k, or (dashed variant) halfway between echo k and k+1.
        const int k = p.suppress_echo;
        if (k < 1) throw SequenceError("preset fig1b: suppress_echo must be >= 1");
        add_window(p.between_echoes ? (k + 1.5) * p.tau : (k + 1) * p.tau);
    } else if (name == "fig2a") {
        add_window(2.0 * p.tau);  // centered on the expected echo1 time
    } else if (name == "fig2e" || name == "fig3e") {
        // plain two-pulse train, no detuning
    } else {
        throw SequenceError("unknown preset '" + std::string(name) + "'");
    }
    seq.validate();
    return seq;
}

}  // namespace sse
