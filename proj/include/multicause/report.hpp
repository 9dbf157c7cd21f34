#pragma once

#include <string>
#include <vector>

namespace multicause {

/// Writes `content` to `path` via a sibling temporary file and rename, so
/// readers never see a partial file. Throws Error on I/O failure.
void atomic_write(const std::string &path, const std::string &content);

struct Series {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

/// Self-contained SVG line chart (no scripts, no external fonts).
std::string render_svg_chart(const std::vector<Series> &series, const std::string &title,
                             const std::string &x_label, const std::string &y_label,
                             bool log_x = false);

/// Long-format CSV `series,x,y`.
std::string series_csv(const std::vector<Series> &series);

/// Plain-text table with a header row. The first `left_columns` columns are
/// left-aligned, the rest right-aligned.
std::string render_text_table(const std::vector<std::string> &header,
                              const std::vector<std::vector<std::string>> &rows,
                              std::size_t left_columns = 1);

/// "%.3f", or "NA" for non-finite input.
std::string fixed3(double x);

}  // namespace multicause
