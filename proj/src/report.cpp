#include "multicause/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "multicause/error.hpp"

namespace multicause {

void atomic_write(const std::string &path, const std::string &content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open " + tmp.string() + " for writing");
        out << content;
        out.flush();
        if (!out) throw Error("write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("cannot rename temporary file onto " + target.string());
    }
}

std::string fixed3(double x) {
    if (!std::isfinite(x)) return "NA";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", x);
    return buf;
}

std::string series_csv(const std::vector<Series> &series) {
    std::ostringstream out;
    out << "series,x,y\n";
    char buf[64];
    for (const auto &s : series) {
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            out << s.name << ',';
            std::snprintf(buf, sizeof buf, "%.10g,%.10g\n", s.x[i], s.y[i]);
            out << buf;
        }
    }
    return out.str();
}

std::string render_text_table(const std::vector<std::string> &header,
                              const std::vector<std::vector<std::string>> &rows,
                              std::size_t left_columns) {
    std::vector<size_t> width(header.size(), 0);
    for (size_t j = 0; j < header.size(); ++j) width[j] = header[j].size();
    for (const auto &r : rows)
        for (size_t j = 0; j < r.size() && j < width.size(); ++j)
            width[j] = std::max(width[j], r[j].size());
    std::ostringstream out;
    auto line = [&](const std::vector<std::string> &cells) {
        for (size_t j = 0; j < width.size(); ++j) {
            const std::string c = j < cells.size() ? cells[j] : "";
            const std::string pad(width[j] - c.size(), ' ');
            if (j > 0) out << "  ";
            if (j < left_columns)
                out << c << pad;
            else
                out << pad << c;
        }
        out << '\n';
    };
    line(header);
    size_t total = 0;
    for (size_t j = 0; j < width.size(); ++j) total += width[j] + (j ? 2 : 0);
    out << std::string(total, '-') << '\n';
    for (const auto &r : rows) line(r);
    return out.str();
}

namespace {

std::string escape(const std::string &s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", x);
    return buf;
}

std::string tick(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
}

}  // namespace

std::string render_svg_chart(const std::vector<Series> &series, const std::string &title,
                             const std::string &x_label, const std::string &y_label, bool log_x) {
    constexpr double W = 640, H = 420, L = 70, R = 160, T = 40, B = 55;
    static const char *palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

    auto tx = [&](double x) { return log_x ? std::log10(x) : x; };
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto &s : series) {
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_x && !(s.x[i] > 0))) continue;
            xmin = std::min(xmin, tx(s.x[i]));
            xmax = std::max(xmax, tx(s.x[i]));
            ymin = std::min(ymin, s.y[i]);
            ymax = std::max(ymax, s.y[i]);
        }
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    if (xmax == xmin) xmax = xmin + 1;
    ymin = std::min(ymin, 0.0);
    if (ymax == ymin) ymax = ymin + 1;
    ymax += 0.05 * (ymax - ymin);

    auto px = [&](double x) { return L + (tx(x) - xmin) / (xmax - xmin) * (W - L - R); };
    auto pxt = [&](double t) { return L + (t - xmin) / (xmax - xmin) * (W - L - R); };
    auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
        << "\" viewBox=\"0 0 " << W << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
        << escape(title) << "</text>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
        << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        double t = xmin + (xmax - xmin) * i / 4.0;
        double label = log_x ? std::pow(10.0, t) : t;
        out << "<text x=\"" << num(pxt(t)) << "\" y=\"" << H - B + 16
            << "\" text-anchor=\"middle\">" << tick(label) << "</text>\n";
        double y = ymin + (ymax - ymin) * i / 4.0;
        out << "<text x=\"" << L - 6 << "\" y=\"" << num(py(y) + 4) << "\" text-anchor=\"end\">"
            << tick(y) << "</text>\n";
        out << "<line x1=\"" << L << "\" y1=\"" << num(py(y)) << "\" x2=\"" << W - R << "\" y2=\""
            << num(py(y)) << "\" stroke=\"#dddddd\"/>\n";
    }
    out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">"
        << escape(x_label) << "</text>\n";
    out << "<text transform=\"translate(18," << (T + H - B) / 2
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(y_label) << "</text>\n";

    for (size_t k = 0; k < series.size(); ++k) {
        const auto &s = series[k];
        const char *color = palette[k % 6];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
            if (!std::isfinite(s.y[i]) || (log_x && !(s.x[i] > 0))) continue;
            out << num(px(s.x[i])) << ',' << num(py(s.y[i])) << ' ';
        }
        out << "\"/>\n";
        const double ly = T + 10 + 18.0 * static_cast<double>(k);
        out << "<line x1=\"" << W - R + 12 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 32
            << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << W - R + 38 << "\" y=\"" << ly + 4 << "\">" << escape(s.name)
            << "</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace multicause
