#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace lrl {

/// Self-contained SVG line plots with optional shaded bands; no external
/// plotting runtime.
class SvgPlot {
public:
    SvgPlot(std::string title, std::string xlabel, std::string ylabel)
        : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

    void add_series(std::vector<double> x, std::vector<double> y, const std::string& label) {
        if (x.size() != y.size()) throw std::invalid_argument("svg: x/y size mismatch");
        series_.push_back({std::move(x), std::move(y), label, color(series_.size())});
    }

    /// Shaded region between lo and hi, drawn under the curves.
    void add_band(std::vector<double> x, std::vector<double> lo, std::vector<double> hi) {
        if (x.size() != lo.size() || x.size() != hi.size())
            throw std::invalid_argument("svg: band size mismatch");
        bands_.push_back({std::move(x), std::move(lo), std::move(hi), color(bands_.size())});
    }

    void write(const std::string& path) const {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << render();
    }

    std::string render() const {
        double x_min = 0, x_max = 1, y_min = 0, y_max = 1;
        bool any = false;
        auto widen = [&](double x, double y) {
            if (!std::isfinite(x) || !std::isfinite(y)) return;
            if (!any) {
                x_min = x_max = x;
                y_min = y_max = y;
                any = true;
            } else {
                x_min = std::min(x_min, x);
                x_max = std::max(x_max, x);
                y_min = std::min(y_min, y);
                y_max = std::max(y_max, y);
            }
        };
        for (const Series& s : series_)
            for (size_t i = 0; i < s.x.size(); ++i) widen(s.x[i], s.y[i]);
        for (const Band& b : bands_)
            for (size_t i = 0; i < b.x.size(); ++i) {
                widen(b.x[i], b.lo[i]);
                widen(b.x[i], b.hi[i]);
            }
        if (x_max == x_min) x_max = x_min + 1;
        if (y_max == y_min) y_max = y_min + 1;
        const double y_pad = 0.05 * (y_max - y_min);
        y_min -= y_pad;
        y_max += y_pad;

        const double W = 860, H = 540, L = 70, R = 24, T = 40, B = 56;
        auto px = [&](double x) { return L + (x - x_min) / (x_max - x_min) * (W - L - R); };
        auto py = [&](double y) { return H - B - (y - y_min) / (y_max - y_min) * (H - T - B); };

        std::ostringstream out;
        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
            << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
        out << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
        out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\" "
               "font-family=\"sans-serif\">"
            << escape(title_) << "</text>\n";

        // axes and ticks
        out << "<g stroke=\"#444\" stroke-width=\"1\">\n";
        out << line(L, H - B, W - R, H - B) << line(L, T, L, H - B);
        out << "</g>\n<g font-size=\"11\" font-family=\"sans-serif\" fill=\"#333\">\n";
        for (double tx : ticks(x_min, x_max)) {
            out << "<line x1=\"" << px(tx) << "\" y1=\"" << H - B << "\" x2=\"" << px(tx)
                << "\" y2=\"" << H - B + 5 << "\" stroke=\"#444\"/>";
            out << "<text x=\"" << px(tx) << "\" y=\"" << H - B + 18
                << "\" text-anchor=\"middle\">" << tick_label(tx) << "</text>\n";
        }
        for (double ty : ticks(y_min, y_max)) {
            out << "<line x1=\"" << L - 5 << "\" y1=\"" << py(ty) << "\" x2=\"" << L << "\" y2=\""
                << py(ty) << "\" stroke=\"#444\"/>";
            out << "<line x1=\"" << L << "\" y1=\"" << py(ty) << "\" x2=\"" << W - R << "\" y2=\""
                << py(ty) << "\" stroke=\"#eee\"/>";
            out << "<text x=\"" << L - 8 << "\" y=\"" << py(ty) + 4 << "\" text-anchor=\"end\">"
                << tick_label(ty) << "</text>\n";
        }
        out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 14
            << "\" text-anchor=\"middle\" font-size=\"13\">" << escape(xlabel_) << "</text>\n";
        out << "<text x=\"18\" y=\"" << (T + H - B) / 2
            << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 18 "
            << (T + H - B) / 2 << ")\">" << escape(ylabel_) << "</text>\n</g>\n";

        for (const Band& b : bands_) {
            out << "<polygon fill=\"" << b.color << "\" fill-opacity=\"0.18\" stroke=\"none\" "
                   "points=\"";
            for (size_t i = 0; i < b.x.size(); ++i)
                out << px(b.x[i]) << ',' << py(b.hi[i]) << ' ';
            for (size_t i = b.x.size(); i-- > 0;)
                out << px(b.x[i]) << ',' << py(b.lo[i]) << ' ';
            out << "\"/>\n";
        }
        for (const Series& s : series_) {
            out << "<polyline fill=\"none\" stroke=\"" << s.color
                << "\" stroke-width=\"1.8\" points=\"";
            for (size_t i = 0; i < s.x.size(); ++i) out << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
            out << "\"/>\n";
        }

        // legend
        double ly = T + 10;
        out << "<g font-size=\"12\" font-family=\"sans-serif\">\n";
        for (const Series& s : series_) {
            out << "<line x1=\"" << W - R - 150 << "\" y1=\"" << ly << "\" x2=\"" << W - R - 126
                << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2.5\"/>";
            out << "<text x=\"" << W - R - 120 << "\" y=\"" << ly + 4 << "\">" << escape(s.label)
                << "</text>\n";
            ly += 18;
        }
        out << "</g>\n</svg>\n";
        return out.str();
    }

private:
    struct Series {
        std::vector<double> x, y;
        std::string label;
        std::string color;
    };
    struct Band {
        std::vector<double> x, lo, hi;
        std::string color;
    };

    static std::string color(size_t i) {
        static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                        "#9467bd", "#8c564b", "#7f7f7f", "#17becf"};
        return palette[i % 8];
    }

    static std::string line(double x1, double y1, double x2, double y2) {
        std::ostringstream out;
        out << "<line x1=\"" << x1 << "\" y1=\"" << y1 << "\" x2=\"" << x2 << "\" y2=\"" << y2
            << "\"/>";
        return out.str();
    }

    static std::vector<double> ticks(double lo, double hi) {
        const double span = hi - lo;
        const double raw = span / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        double step = mag;
        if (raw / mag >= 5.0)
            step = 5.0 * mag;
        else if (raw / mag >= 2.0)
            step = 2.0 * mag;
        std::vector<double> out;
        for (double t = std::ceil(lo / step) * step; t <= hi + step * 1e-9; t += step)
            out.push_back(t);
        return out;
    }

    static std::string tick_label(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%g", v + 0.0);  // normalize -0
        return buf;
    }

    static std::string escape(const std::string& s) {
        std::string out;
        for (char c : s) {
            if (c == '&')
                out += "&amp;";
            else if (c == '<')
                out += "&lt;";
            else if (c == '>')
                out += "&gt;";
            else
                out += c;
        }
        return out;
    }

    std::string title_, xlabel_, ylabel_;
    std::vector<Series> series_;
    std::vector<Band> bands_;
};

}  // namespace lrl
