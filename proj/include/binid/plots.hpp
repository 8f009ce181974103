#ifndef BINID_PLOTS_HPP
#define BINID_PLOTS_HPP

#include <filesystem>
#include <fstream>
#include <string>

#include "binid/errors.hpp"

namespace binid {

/// 1-based CSV column indices of the fixed trace layout for dimension p.
struct TraceColumns {
    explicit TraceColumns(std::size_t p)
        : k(1), cum_regret(2 * p + 10), g_n(2 * p + 14), j_n(2 * p + 15), l_n(2 * p + 16)
    {
    }

    std::size_t k;
    std::size_t cum_regret;
    std::size_t g_n;
    std::size_t j_n;
    std::size_t l_n;
};

namespace detail {

inline void write_plot_script(const std::filesystem::path& path, const std::string& trace_file,
                              const std::string& ylabel, const std::string& expr,
                              const std::string& title)
{
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot write plot script: " + path.string());
    out << "set datafile separator ','\n";
    out << "set datafile missing ''\n";
    out << "set logscale x\n";
    out << "set xlabel 'n'\n";
    out << "set ylabel '" << ylabel << "'\n";
    out << "set key off\n";
    out << "set grid\n";
    out << "plot '" << trace_file << "' using " << expr << " with lines title '" << title
        << "'\n";
}

} // namespace detail

/// Emit the four figure scripts next to the traces. The tracking-error figure
/// is written only for control runs (its columns are empty otherwise). Each
/// script plots one sample path: the first seed's trace.
inline void emit_gnuplot_scripts(const std::filesystem::path& out_dir,
                                 const std::string& trace_file, std::size_t p, bool control)
{
    const TraceColumns col(p);
    const std::string k = std::to_string(col.k);
    detail::write_plot_script(out_dir / "fig1_gn.gp", trace_file, "G_n",
                              k + ":" + std::to_string(col.g_n), "G_n");
    detail::write_plot_script(
        out_dir / "fig2_cum_regret_over_logn.gp", trace_file, 'c' + std::string("um regret / log n"),
        k + ":($" + k + ">=2 ? $" + std::to_string(col.cum_regret) + "/log($" + k + ") : 1/0)",
        "cumulative regret over log n");
    detail::write_plot_script(out_dir / "fig3_avg_regret.gp", trace_file, "average regret",
                              k + ":($" + std::to_string(col.cum_regret) + "/($" + k + "+1))",
                              "average regret");
    if (control)
        detail::write_plot_script(out_dir / "fig4_ln.gp", trace_file, "L_n",
                                  k + ":" + std::to_string(col.l_n), "L_n");
}

} // namespace binid

#endif // BINID_PLOTS_HPP
