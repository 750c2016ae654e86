#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "prepbench/bench.hpp"
#include "prepbench/dataset_io.hpp"
#include "prepbench/errors.hpp"
#include "prepbench/metrics.hpp"

namespace prepbench::bench {

namespace {

using dataset_io::fmt_double;
using metrics::SummaryBand;

struct MethodStats {
    SummaryBand test, train, gap;
    std::size_t n = 0;
};

// Mean-dot-with-band chart: one column per method, whiskers at mean +/- 2*std,
// a dashed oracle reference line, and the numbers embedded as a comment so
// figures diff without a rendering toolkit.
std::string band_svg(const std::string& title,
                     const std::vector<std::string>& methods,
                     const std::vector<SummaryBand>& bands, double oracle_mean,
                     bool draw_oracle) {
    const int width = 120 + static_cast<int>(methods.size()) * 90;
    const int height = 360;
    const double plot_left = 70, plot_right = width - 30.0;
    const double plot_top = 40, plot_bottom = height - 60.0;

    double lo = draw_oracle ? oracle_mean : 1e300;
    double hi = draw_oracle ? oracle_mean : -1e300;
    for (const auto& b : bands) {
        lo = std::min(lo, b.lower);
        hi = std::max(hi, b.upper);
    }
    if (!(hi > lo)) {
        hi = lo + 1e-3;
        lo -= 1e-3;
    }
    const double pad = 0.08 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto ycoord = [&](double v) {
        return plot_bottom - (v - lo) / (hi - lo) * (plot_bottom - plot_top);
    };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
    s << "<!-- data: method,mean,std,lower,upper\n";
    for (std::size_t m = 0; m < methods.size(); ++m)
        s << methods[m] << ',' << fmt_double(bands[m].mean) << ','
          << fmt_double(bands[m].std) << ',' << fmt_double(bands[m].lower) << ','
          << fmt_double(bands[m].upper) << '\n';
    if (draw_oracle) s << "oracle," << fmt_double(oracle_mean) << ",,,\n";
    s << "-->\n";
    s << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"15\">" << title << "</text>\n";
    s << "<line x1=\"" << plot_left << "\" y1=\"" << plot_bottom << "\" x2=\""
      << plot_right << "\" y2=\"" << plot_bottom
      << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    s << "<line x1=\"" << plot_left << "\" y1=\"" << plot_top << "\" x2=\""
      << plot_left << "\" y2=\"" << plot_bottom
      << "\" stroke=\"#333\" stroke-width=\"1\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + (hi - lo) * tick / 4.0;
        const double y = ycoord(v);
        s << "<line x1=\"" << plot_left - 4 << "\" y1=\"" << y << "\" x2=\""
          << plot_left << "\" y2=\"" << y << "\" stroke=\"#333\"/>\n";
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.4f", v);
        s << "<text x=\"" << plot_left - 8 << "\" y=\"" << y + 4
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
          << buf << "</text>\n";
    }
    if (draw_oracle) {
        const double y = ycoord(oracle_mean);
        s << "<line x1=\"" << plot_left << "\" y1=\"" << y << "\" x2=\""
          << plot_right << "\" y2=\"" << y
          << "\" stroke=\"#888\" stroke-dasharray=\"6,4\"/>\n";
        s << "<text x=\"" << plot_right << "\" y=\"" << y - 5
          << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
             "fill=\"#666\">oracle</text>\n";
    }
    const double span = (plot_right - plot_left) / static_cast<double>(methods.size());
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const double x = plot_left + span * (static_cast<double>(m) + 0.5);
        const double ylo = ycoord(bands[m].lower);
        const double yhi = ycoord(bands[m].upper);
        const double ymid = ycoord(bands[m].mean);
        s << "<line x1=\"" << x << "\" y1=\"" << ylo << "\" x2=\"" << x
          << "\" y2=\"" << yhi << "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
        for (double ycap : {ylo, yhi})
            s << "<line x1=\"" << x - 7 << "\" y1=\"" << ycap << "\" x2=\""
              << x + 7 << "\" y2=\"" << ycap
              << "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
        s << "<circle cx=\"" << x << "\" cy=\"" << ymid
          << "\" r=\"4\" fill=\"#1f77b4\"/>\n";
        s << "<text x=\"" << x << "\" y=\"" << plot_bottom + 18
          << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
             "font-size=\"11\">" << methods[m] << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace

void write_report_files(const std::string& dir,
                        const std::vector<std::string>& methods,
                        const std::vector<RunResult>& results,
                        bool rankings_expected) {
    if (results.empty()) throw ReportError("report: no results");

    std::map<std::string, std::vector<const RunResult*>> ok;
    for (const auto& r : results)
        if (!r.failed) ok[r.method].push_back(&r);
    for (const auto& m : methods)
        if (ok.find(m) == ok.end() || ok[m].empty())
            throw ReportError("report: method '" + m + "' has no successful runs");

    double oracle_sum = 0.0;
    std::size_t oracle_n = 0;
    std::vector<MethodStats> stats(methods.size());
    std::vector<SummaryBand> test_bands, gap_bands;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        std::vector<double> test, train, gap;
        for (const RunResult* r : ok[methods[m]]) {
            test.push_back(r->test_auc);
            train.push_back(r->train_auc);
            gap.push_back(r->auc_gap);
            oracle_sum += r->oracle_auc;
            ++oracle_n;
        }
        stats[m].test = metrics::summarize(test);
        stats[m].train = metrics::summarize(train);
        stats[m].gap = metrics::summarize(gap);
        stats[m].n = test.size();
        test_bands.push_back(stats[m].test);
        gap_bands.push_back(stats[m].gap);
    }
    const double oracle_mean = oracle_sum / static_cast<double>(oracle_n);

    std::ostringstream csv;
    csv << "method,n,test_auc_mean,test_auc_std,test_auc_lower,test_auc_upper,"
           "train_auc_mean,train_auc_std,train_auc_lower,train_auc_upper,"
           "gap_mean,gap_std,gap_lower,gap_upper,oracle_auc_mean\n";
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const auto& st = stats[m];
        csv << methods[m] << ',' << st.n << ',' << fmt_double(st.test.mean) << ','
            << fmt_double(st.test.std) << ',' << fmt_double(st.test.lower) << ','
            << fmt_double(st.test.upper) << ',' << fmt_double(st.train.mean) << ','
            << fmt_double(st.train.std) << ',' << fmt_double(st.train.lower) << ','
            << fmt_double(st.train.upper) << ',' << fmt_double(st.gap.mean) << ','
            << fmt_double(st.gap.std) << ',' << fmt_double(st.gap.lower) << ','
            << fmt_double(st.gap.upper) << ',' << fmt_double(oracle_mean) << '\n';
    }
    dataset_io::write_file_atomic(dir + "/summary.csv", csv.str());

    dataset_io::write_file_atomic(
        dir + "/plots/test_auc.svg",
        band_svg("Validation AUC by method (mean \xC2\xB1 2 std)", methods,
                 test_bands, oracle_mean, true));
    dataset_io::write_file_atomic(
        dir + "/plots/auc_gap.svg",
        band_svg("Train-test AUC gap by method (mean \xC2\xB1 2 std)", methods,
                 gap_bands, 0.0, false));

    if (rankings_expected) {
        // Average feature rank per method across iterations.
        std::size_t n_features = 0;
        for (const auto& r : results)
            if (!r.failed && !r.ranking.empty()) n_features = r.ranking.size();
        if (n_features > 0) {
            std::ostringstream rc;
            rc << "feature";
            std::vector<std::vector<double>> avg(methods.size());
            for (std::size_t m = 0; m < methods.size(); ++m) {
                rc << ',' << methods[m];
                std::vector<std::vector<int>> ranks;
                for (const RunResult* r : ok[methods[m]])
                    if (r->ranking.size() == n_features) ranks.push_back(r->ranking);
                if (!ranks.empty()) avg[m] = metrics::average_rank(ranks);
            }
            rc << '\n';
            for (std::size_t f = 0; f < n_features; ++f) {
                rc << 'x' << f;
                for (std::size_t m = 0; m < methods.size(); ++m) {
                    rc << ',';
                    if (!avg[m].empty()) rc << fmt_double(avg[m][f]);
                }
                rc << '\n';
            }
            dataset_io::write_file_atomic(dir + "/rankings.csv", rc.str());
        }
    }
}

}  // namespace prepbench::bench
