#include "pot/imt.hpp"
#include "pot/series_io.hpp"

#include <cmath>
#include <sstream>

namespace pot {

namespace {

constexpr const char* kNA = "NA";

std::string center_text(const GridSurface& s) {
  if (!s.window_center) return "none";
  if (s.center_is_day) return io::format_date(static_cast<DayNumber>(std::floor(*s.window_center)));
  return io::format_double(*s.window_center);
}

std::string opt_text(const std::optional<double>& v) { return v ? io::format_double(*v) : kNA; }

nlohmann::json opt_json(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

}  // namespace

std::string surface_csv(const std::vector<GridSurface>& surfaces, const std::vector<std::vector<bool>>* fdr,
                        const std::vector<std::string>& comments) {
  std::ostringstream out;
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "window_center,p,K,N,theta,se,T,pvalue,reliable,flag";
  if (fdr) out << ",fdr_reject";
  out << '\n';
  for (std::size_t w = 0; w < surfaces.size(); ++w) {
    const auto& s = surfaces[w];
    const std::string centre = center_text(s);
    for (std::size_t k = 0; k < s.cells.size(); ++k) {
      const auto& cell = s.cells[k];
      out << centre << ',' << io::format_double(cell.p) << ',' << cell.K << ',' << cell.n_exceedances << ',';
      out << (cell.theta ? io::format_double(cell.theta->theta_hat) : kNA) << ',';
      out << (cell.theta ? opt_text(cell.theta->se_sandwich) : kNA) << ',';
      out << (cell.imt ? io::format_double(cell.imt->T) : kNA) << ',';
      out << (cell.imt ? io::format_double(cell.imt->p_value) : kNA) << ',';
      out << (cell.imt ? (cell.imt->reliable ? "true" : "false") : kNA) << ',';
      out << to_string(cell.flag);
      if (fdr) out << ',' << (cell.imt ? ((*fdr)[w][k] ? "true" : "false") : kNA);
      out << '\n';
    }
  }
  return out.str();
}

nlohmann::json surface_json(const std::vector<GridSurface>& surfaces, const std::vector<std::vector<bool>>* fdr) {
  nlohmann::json doc = nlohmann::json::array();
  for (std::size_t w = 0; w < surfaces.size(); ++w) {
    const auto& s = surfaces[w];
    nlohmann::json js;
    js["window_center"] = center_text(s);
    js["p_grid"] = s.ps;
    js["K_grid"] = s.Ks;
    nlohmann::json cells = nlohmann::json::array();
    for (std::size_t k = 0; k < s.cells.size(); ++k) {
      const auto& cell = s.cells[k];
      nlohmann::json jc;
      jc["p"] = cell.p;
      jc["K"] = cell.K;
      jc["threshold"] = cell.threshold;
      jc["N"] = cell.n_exceedances;
      jc["flag"] = to_string(cell.flag);
      if (cell.theta) {
        jc["theta"] = cell.theta->theta_hat;
        jc["se"] = opt_json(cell.theta->se_sandwich);
        jc["se_naive"] = opt_json(cell.theta->se_naive);
        jc["boundary"] = cell.theta->boundary;
      } else {
        jc["theta"] = nullptr;
        jc["se"] = nullptr;
        jc["se_naive"] = nullptr;
        jc["boundary"] = nullptr;
      }
      if (cell.imt) {
        jc["T"] = cell.imt->T;
        jc["pvalue"] = cell.imt->p_value;
        jc["D"] = cell.imt->D;
        jc["D_prime"] = cell.imt->D_prime;
        jc["V"] = cell.imt->V;
        jc["reliable"] = cell.imt->reliable;
      } else {
        for (const char* key : {"T", "pvalue", "D", "D_prime", "V", "reliable"}) jc[key] = nullptr;
      }
      if (fdr) jc["fdr_reject"] = cell.imt ? nlohmann::json((*fdr)[w][k]) : nlohmann::json(nullptr);
      cells.push_back(std::move(jc));
    }
    js["cells"] = std::move(cells);
    doc.push_back(std::move(js));
  }
  return doc;
}

}  // namespace pot
