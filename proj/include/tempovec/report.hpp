#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempovec/common.hpp"
#include "tempovec/corpus.hpp"
#include "tempovec/shift.hpp"

namespace tempovec {

struct ReportProvenance {
    std::string model_dir;
    std::string vocab_hash;
    std::string direction;
    int span_count = 0;
    int baseline_sample_size = 0;
    uint64_t baseline_seed = 0;
};

namespace detail {

inline std::string fmt_double(double v, const char* spec = "%.6g") {
    char buf[64];
    std::snprintf(buf, sizeof(buf), spec, v);
    return buf;
}

}  // namespace detail

// "word,transition,span_a,span_b,cosine,count_a,count_b"; undefined cosines
// stay empty rather than pretending to be 0.
inline void write_series_csv(std::ostream& out, const std::vector<SimilaritySeries>& series,
                             const TimeSpanConfig& time) {
    out << "word,transition,span_a,span_b,cosine,count_a,count_b\n";
    for (const auto& s : series) {
        for (size_t t = 0; t < s.values.size(); ++t) {
            out << s.word << ',' << t << ',' << time.span_label(static_cast<int>(t)) << ','
                << time.span_label(static_cast<int>(t) + 1) << ',';
            if (s.values[t]) out << detail::fmt_double(*s.values[t]);
            out << ',';
            if (!s.occurrence_counts.empty())
                out << s.occurrence_counts[t] << ',' << s.occurrence_counts[t + 1];
            else
                out << ',';
            out << '\n';
        }
    }
}

inline void write_band_csv(std::ostream& out, const BaselineBand& band) {
    out << "transition,mean,std,n_effective\n";
    for (size_t t = 0; t < band.mean.size(); ++t)
        out << t << ',' << detail::fmt_double(band.mean[t]) << ','
            << detail::fmt_double(band.stddev[t]) << ',' << band.n_effective[t] << '\n';
}

inline nlohmann::json report_to_json(const std::vector<ShiftReport>& reports,
                                     const std::map<std::string, std::string>& word_errors,
                                     const BaselineBand& band, const TimeSpanConfig& time,
                                     const ReportProvenance& prov) {
    nlohmann::json j;
    j["format"] = "tempovec-report v1";
    j["provenance"] = {{"model_dir", prov.model_dir},
                       {"vocab_hash", prov.vocab_hash},
                       {"direction", prov.direction},
                       {"span_count", prov.span_count},
                       {"baseline_sample_size", prov.baseline_sample_size},
                       {"baseline_seed", prov.baseline_seed}};
    j["transitions"] = nlohmann::json::array();
    const int n_trans = time.span_count() - 1;
    for (int t = 0; t < n_trans; ++t)
        j["transitions"].push_back({{"index", t},
                                    {"span_a", time.span_label(t)},
                                    {"span_b", time.span_label(t + 1)}});
    j["baseline"] = nlohmann::json::array();
    for (size_t t = 0; t < band.mean.size(); ++t)
        j["baseline"].push_back({{"transition", t},
                                 {"mean", band.mean[t]},
                                 {"std", band.stddev[t]},
                                 {"n_effective", band.n_effective[t]}});
    j["words"] = nlohmann::json::array();
    for (const auto& r : reports) {
        nlohmann::json w;
        w["word"] = r.word;
        w["detection_params"] = {{"z_threshold", r.params.z_threshold},
                                 {"min_relative_drop", r.params.min_relative_drop},
                                 {"min_occurrences", r.params.min_occurrences}};
        w["series"] = nlohmann::json::array();
        for (size_t t = 0; t < r.series.values.size(); ++t) {
            nlohmann::json p;
            p["transition"] = t;
            if (r.series.values[t]) p["cosine"] = *r.series.values[t];
            else p["cosine"] = nullptr;
            if (!r.series.occurrence_counts.empty()) {
                p["count_a"] = r.series.occurrence_counts[t];
                p["count_b"] = r.series.occurrence_counts[t + 1];
            }
            w["series"].push_back(std::move(p));
        }
        w["flagged"] = nlohmann::json::array();
        for (const auto& f : r.flagged) {
            nlohmann::json fl;
            fl["transition"] = f.transition;
            if (std::isinf(f.z)) {
                fl["z"] = nullptr;
                fl["z_infinite"] = true;
            } else {
                fl["z"] = f.z;
            }
            if (f.relative_drop) fl["relative_drop"] = *f.relative_drop;
            else fl["relative_drop"] = nullptr;
            w["flagged"].push_back(std::move(fl));
        }
        j["words"].push_back(std::move(w));
    }
    j["word_errors"] = nlohmann::json::object();
    for (const auto& [word, err] : word_errors) j["word_errors"][word] = err;
    return j;
}

// One chart per word in the layout of the classic similarity plot: the
// word's series dotted, the baseline mean solid over a +-1 std band, flagged
// transitions marked, and an optional red dot at the year the figurative
// sense entered the reference dictionary.
inline void write_series_svg(std::ostream& out, const ShiftReport& report,
                             const BaselineBand& band, const TimeSpanConfig& time,
                             std::optional<int> dictionary_year = std::nullopt) {
    const int n = static_cast<int>(report.series.values.size());
    const double width = 900, height = 460;
    const double left = 64, right = 880, top = 48, bottom = 330;

    double lo = 1.0, hi = 0.0;
    const auto consider = [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    };
    for (const auto& v : report.series.values)
        if (v) consider(*v);
    for (size_t t = 0; t < band.mean.size(); ++t) {
        consider(band.mean[t] - band.stddev[t]);
        consider(band.mean[t] + band.stddev[t]);
    }
    if (lo > hi) { lo = 0.0; hi = 1.0; }
    const double pad = std::max(0.02, (hi - lo) * 0.1);
    hi = std::min(1.0, hi + pad);
    lo = lo - pad;

    const auto x_of = [&](double t) { return left + (t + 0.5) / n * (right - left); };
    const auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * (bottom - top); };
    const auto num = [](double v) { return detail::fmt_double(v, "%.2f"); };

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << left << "\" y=\"28\" font-family=\"sans-serif\" font-size=\"18\">"
        << report.word << "</text>\n";

    // y grid and labels
    for (int g = 0; g <= 4; ++g) {
        const double v = lo + (hi - lo) * g / 4.0;
        out << "<line x1=\"" << left << "\" y1=\"" << num(y_of(v)) << "\" x2=\"" << right
            << "\" y2=\"" << num(y_of(v)) << "\" stroke=\"#e0e0e0\"/>\n";
        out << "<text x=\"" << left - 8 << "\" y=\"" << num(y_of(v) + 4)
            << "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">"
            << detail::fmt_double(v, "%.3f") << "</text>\n";
    }

    // x tick labels: explicit spanA/spanB pairs, rotated
    for (int t = 0; t < n; ++t) {
        const std::string label = time.span_label(t) + "/" + time.span_label(t + 1);
        out << "<text x=\"" << num(x_of(t)) << "\" y=\"" << bottom + 14
            << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-45 "
            << num(x_of(t)) << " " << bottom + 14 << ")\">" << label << "</text>\n";
    }

    // baseline band (+-1 std) and mean
    if (!band.mean.empty()) {
        out << "<polygon fill=\"#d8d8d8\" fill-opacity=\"0.55\" stroke=\"none\" points=\"";
        for (int t = 0; t < n; ++t)
            out << num(x_of(t)) << ',' << num(y_of(band.mean[static_cast<size_t>(t)] +
                                                   band.stddev[static_cast<size_t>(t)])) << ' ';
        for (int t = n - 1; t >= 0; --t)
            out << num(x_of(t)) << ',' << num(y_of(band.mean[static_cast<size_t>(t)] -
                                                   band.stddev[static_cast<size_t>(t)])) << ' ';
        out << "\"/>\n";
        out << "<polyline fill=\"none\" stroke=\"#444444\" stroke-width=\"1.8\" points=\"";
        for (int t = 0; t < n; ++t)
            out << num(x_of(t)) << ',' << num(y_of(band.mean[static_cast<size_t>(t)])) << ' ';
        out << "\"/>\n";
    }

    // word series, dotted, split at undefined values
    std::string seg;
    int seg_points = 0;
    const auto flush_seg = [&]() {
        if (seg_points >= 2)
            out << "<polyline fill=\"none\" stroke=\"#1f4f9f\" stroke-width=\"1.6\" "
                   "stroke-dasharray=\"2,5\" points=\""
                << seg << "\"/>\n";
        seg.clear();
        seg_points = 0;
    };
    for (int t = 0; t < n; ++t) {
        const auto& v = report.series.values[static_cast<size_t>(t)];
        if (!v) {
            flush_seg();
            continue;
        }
        seg += num(x_of(t)) + "," + num(y_of(*v)) + " ";
        ++seg_points;
        out << "<circle cx=\"" << num(x_of(t)) << "\" cy=\"" << num(y_of(*v))
            << "\" r=\"2.2\" fill=\"#1f4f9f\"/>\n";
    }
    flush_seg();

    // flagged transitions
    for (const auto& f : report.flagged) {
        const auto& v = report.series.values[static_cast<size_t>(f.transition)];
        if (!v) continue;
        out << "<circle cx=\"" << num(x_of(f.transition)) << "\" cy=\"" << num(y_of(*v))
            << "\" r=\"5\" fill=\"none\" stroke=\"#e07000\" stroke-width=\"2.2\"><title>flagged: z="
            << detail::fmt_double(f.z, "%.3g") << "</title></circle>\n";
    }

    // dictionary inclusion year: transitions sit at span boundaries, so the
    // year interpolates onto the boundary scale
    if (dictionary_year) {
        const double first_boundary = time.span_end_year(0) + 0.5;
        const double ft = std::clamp(
            (static_cast<double>(*dictionary_year) - first_boundary) / time.span_width_years,
            0.0, static_cast<double>(n - 1));
        const int nearest = static_cast<int>(std::lround(ft));
        const auto& v = report.series.values[static_cast<size_t>(nearest)];
        const double y = v ? y_of(*v) : top;
        out << "<circle cx=\"" << num(x_of(ft)) << "\" cy=\"" << num(y)
            << "\" r=\"4.5\" fill=\"#cc1111\"><title>dictionary inclusion: "
            << *dictionary_year << "</title></circle>\n";
    }

    // legend
    const double lx = right - 240, ly = top + 4;
    out << "<line x1=\"" << lx << "\" y1=\"" << ly << "\" x2=\"" << lx + 28 << "\" y2=\"" << ly
        << "\" stroke=\"#1f4f9f\" stroke-dasharray=\"2,5\" stroke-width=\"1.6\"/>"
        << "<text x=\"" << lx + 34 << "\" y=\"" << ly + 4
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << report.word << "</text>\n";
    out << "<line x1=\"" << lx << "\" y1=\"" << ly + 16 << "\" x2=\"" << lx + 28 << "\" y2=\""
        << ly + 16 << "\" stroke=\"#444444\" stroke-width=\"1.8\"/>"
        << "<text x=\"" << lx + 34 << "\" y=\"" << ly + 20
        << "\" font-family=\"sans-serif\" font-size=\"11\">baseline mean &#177; std</text>\n";
    if (dictionary_year)
        out << "<circle cx=\"" << lx + 14 << "\" cy=\"" << ly + 32
            << "\" r=\"4.5\" fill=\"#cc1111\"/><text x=\"" << lx + 34 << "\" y=\"" << ly + 36
            << "\" font-family=\"sans-serif\" font-size=\"11\">dictionary date</text>\n";
    out << "</svg>\n";
}

inline void write_series_svg_file(const std::filesystem::path& path, const ShiftReport& report,
                                  const BaselineBand& band, const TimeSpanConfig& time,
                                  std::optional<int> dictionary_year = std::nullopt) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write SVG: " + path.string());
    write_series_svg(out, report, band, time, dictionary_year);
}

// Static metadata file for chart annotation: "word<TAB>year" lines,
// '#' comments allowed.
inline std::map<std::string, int> load_dictionary_dates(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dictionary dates file: " + path.string());
    std::map<std::string, int> dates;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        const auto tab = s.find_first_of("\t ");
        if (tab == std::string::npos)
            throw DataError(path.string() + ":" + std::to_string(lineno) +
                            ": expected 'word<TAB>year'");
        try {
            dates[trim(s.substr(0, tab))] = std::stoi(s.substr(tab + 1));
        } catch (const std::exception&) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": bad year");
        }
    }
    return dates;
}

}  // namespace tempovec
