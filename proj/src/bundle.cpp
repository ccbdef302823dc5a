#include "stackelberg/bundle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace stackelberg {

using nlohmann::json;

namespace {

void emit(std::ostream& os, const json& j, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  switch (j.type()) {
    case json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        os << "null";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.16e", v);
        os << buf;
      }
      return;
    }
    case json::value_t::array: {
      // matrices rows stay on one line
      const bool flat = std::all_of(j.begin(), j.end(), [](const json& e) { return e.is_primitive(); });
      if (j.empty()) {
        os << "[]";
      } else if (flat) {
        os << '[';
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          emit(os, j[i], indent, depth + 1);
        }
        os << ']';
      } else {
        os << "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
          os << pad;
          emit(os, j[i], indent, depth + 1);
          os << (i + 1 < j.size() ? ",\n" : "\n");
        }
        os << close << ']';
      }
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      std::size_t i = 0;
      for (auto it = j.begin(); it != j.end(); ++it, ++i) {
        os << pad << json(it.key()).dump() << ": ";
        emit(os, it.value(), indent, depth + 1);
        os << (i + 1 < j.size() ? ",\n" : "\n");
      }
      os << close << '}';
      return;
    }
    default:
      os << j.dump();
  }
}

json list_json(const MatrixList& l) {
  json arr = json::array();
  for (const auto& m : l) arr.push_back(matrix_to_json(m));
  return arr;
}

json side_json(const RiccatiSide& s) {
  return {{"Qtilde", list_json(s.qtilde)},
          {"Delta", list_json(s.delta)},
          {"K", list_json(s.gain)},
          {"Delta0", s.delta0}};
}

}  // namespace

std::string dump_full_precision(const json& j, int indent) {
  std::ostringstream os;
  emit(os, j, indent, 0);
  os << '\n';
  return os.str();
}

json solution_json(const RunResult& run) {
  const auto& sol = run.solution();
  const auto& ep = run.extreme();
  json out;
  out["mode"] = mode_name(run.config.mode);
  out["horizon"] = run.config.model.horizon;
  out["config"] = expanded_config(run.config);

  json warnings = json::array();
  if (!sol.converged) warnings.push_back("max_iterations");
  if (ep.ambiguous) warnings.push_back("ambiguous_rounding");
  out["warnings"] = warnings;

  out["sdp"] = {{"objective", sol.objective},
                {"iterations", sol.iterations},
                {"primal_residual", sol.primal_residual},
                {"dual_residual", sol.dual_residual},
                {"feasibility_violation", sol.feasibility_violation},
                {"converged", sol.converged},
                {"polished", sol.polished}};

  const MatrixList h = run.h();
  json stages = json::array();
  for (int k = 0; k < run.config.model.horizon; ++k) {
    json st;
    st["stage"] = k + 1;
    st["Sigma"] = matrix_to_json(run.sigma()[k]);
    st["V"] = matrix_to_json(run.problem().v[k]);
    st["S"] = matrix_to_json(sol.s[k]);
    st["P"] = matrix_to_json(ep.p[k]);
    st["rank"] = ep.ranks[k];
    st["rounding_residual"] = ep.rounding_residuals[k];
    st["L"] = matrix_to_json(run.policy().l[k]);
    st["H"] = matrix_to_json(h[k]);
    if (run.comm) st["G"] = matrix_to_json(run.comm->gains[k]);
    stages.push_back(std::move(st));
  }
  out["stages"] = stages;

  const CostPair c = run.costs();
  out["costs"] = {{"sender", c.sender}, {"receiver", c.receiver}};
  if (run.comm) out["costs"]["sender_constant"] = run.comm->constant_sender;

  if (run.control) {
    const auto& ct = run.control->transform;
    out["control"] = {{"sender", side_json(run.control->riccati.sender)},
                      {"receiver", side_json(run.control->riccati.receiver)},
                      {"Phi_S", matrix_to_json(ct.phi_s)},
                      {"Phi_R", matrix_to_json(ct.phi_r)},
                      {"K_S", matrix_to_json(ct.k_s)},
                      {"K_R", matrix_to_json(ct.k_r)},
                      {"T_S", matrix_to_json(ct.t_s)},
                      {"Sigma_o", matrix_to_json(ct.sigma_o)},
                      {"Xi", matrix_to_json(ct.xi)},
                      {"Xi_o", ct.xi0},
                      {"V_o", list_json(ct.vo)}};
  }
  out["alpha"] = json::array();
  for (const auto& row : alpha_rows(run, false)) out["alpha"].push_back(row.alpha);
  return out;
}

void write_alpha_csv(const std::filesystem::path& file, const std::vector<AlphaRow>& rows) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << "horizon,stage,alpha\n";
  char buf[32];
  for (const auto& r : rows) {
    if (std::isnan(r.alpha)) {
      std::snprintf(buf, sizeof buf, "NaN");
    } else {
      std::snprintf(buf, sizeof buf, "%.16e", r.alpha);
    }
    os << r.horizon << ',' << r.stage << ',' << buf << '\n';
  }
}

std::vector<AlphaRow> read_alpha_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  std::string line;
  std::getline(in, line);
  std::vector<AlphaRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    AlphaRow r;
    const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
    r.horizon = std::stoi(line.substr(0, c1));
    r.stage = std::stoi(line.substr(c1 + 1, c2 - c1 - 1));
    r.alpha = std::strtod(line.c_str() + c2 + 1, nullptr);
    rows.push_back(r);
  }
  return rows;
}

void write_solution_bundle(const std::filesystem::path& dir, const RunResult& run) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "solution.json");
  if (!os) throw std::runtime_error("cannot write " + (dir / "solution.json").string());
  os << dump_full_precision(solution_json(run));
  write_alpha_csv(dir / "alpha.csv", alpha_rows(run));
}

SolutionBundle read_solution_bundle(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("cannot read " + file.string());
  SolutionBundle b;
  b.raw = json::parse(in);
  b.mode = b.raw.at("mode").get<std::string>();
  b.horizon = b.raw.at("horizon").get<int>();
  b.objective = b.raw.at("sdp").at("objective").get<double>();
  b.costs = {b.raw.at("costs").at("sender").get<double>(), b.raw.at("costs").at("receiver").get<double>()};
  for (const auto& st : b.raw.at("stages")) {
    b.sigma.push_back(matrix_from_json(st.at("Sigma")));
    b.v.push_back(matrix_from_json(st.at("V")));
    b.s.push_back(matrix_from_json(st.at("S")));
    b.p.push_back(matrix_from_json(st.at("P")));
    b.l.push_back(matrix_from_json(st.at("L")));
    b.h.push_back(matrix_from_json(st.at("H")));
    b.ranks.push_back(st.at("rank").get<int>());
    if (st.contains("G")) b.gains.push_back(matrix_from_json(st.at("G")));
  }
  return b;
}

}  // namespace stackelberg
