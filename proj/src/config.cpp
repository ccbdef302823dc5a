#include "stackelberg/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace stackelberg {

using nlohmann::json;

namespace {

int line_at(const std::string& text, std::size_t pos) {
  pos = std::min(pos, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(pos), '\n'));
}

// Line of the last key in `path`, located by scanning for each key in turn.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  for (const auto& key : path) {
    const auto found = text.find("\"" + key + "\"", pos);
    if (found == std::string::npos) break;
    pos = found;
  }
  return line_at(text, pos);
}

struct Reader {
  const std::string& text;
  const std::string& source;

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string where;
    for (const auto& k : path) where += (where.empty() ? "" : ".") + k;
    throw ConfigError(source, line_of(text, path), where.empty() ? what : where + ": " + what);
  }

  Eigen::MatrixXd matrix(const json& j, const std::vector<std::string>& path) const {
    try {
      return matrix_from_json(j);
    } catch (const std::exception& e) {
      fail(path, e.what());
    }
  }

  static bool is_list(const json& j) {
    return j.is_array() && !j.empty() && j.front().is_array() && !j.front().empty() &&
           j.front().front().is_array();
  }

  MatrixList stages(const json& j, int horizon, const std::vector<std::string>& path) const {
    if (!is_list(j)) return MatrixList(horizon, matrix(j, path));
    if (static_cast<int>(j.size()) < horizon) {
      fail(path, "per-stage list has " + std::to_string(j.size()) + " entries, horizon is " +
                     std::to_string(horizon));
    }
    MatrixList out;
    for (int k = 0; k < horizon; ++k) out.push_back(matrix(j[k], path));
    return out;
  }

  const json& need(const json& obj, const std::string& key, const std::vector<std::string>& path) const {
    if (!obj.contains(key)) {
      auto p = path;
      fail(p, "missing required key \"" + key + "\"");
    }
    return obj.at(key);
  }

  template <typename T>
  T number(const json& j, const std::vector<std::string>& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<T>();
  }
};

std::vector<std::string> extend(std::vector<std::string> path, const std::string& key) {
  path.push_back(key);
  return path;
}

Eigen::MatrixXd blkdiag(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(x.rows() + y.rows(), x.cols() + y.cols());
  out.topLeftCorner(x.rows(), x.cols()) = x;
  out.bottomRightCorner(y.rows(), y.cols()) = y;
  return out;
}

void expand_example1(const Reader& rd, const json& blk, ScenarioConfig& cfg) {
  const std::vector<std::string> path{"example1"};
  const Eigen::MatrixXd az = rd.matrix(rd.need(blk, "Az", path), extend(path, "Az"));
  const Eigen::MatrixXd at = rd.matrix(rd.need(blk, "Atheta", path), extend(path, "Atheta"));
  const MatrixList d = rd.stages(rd.need(blk, "D", path), cfg.model.horizon, extend(path, "D"));
  const Eigen::Index dz = az.rows(), dt = at.rows();
  cfg.model.a = blkdiag(az, at);
  for (int k = 0; k < cfg.model.horizon; ++k) {
    if (d[k].rows() != dz || d[k].cols() != dt) {
      rd.fail(extend(path, "D"), "D must be " + std::to_string(dz) + "x" + std::to_string(dt));
    }
    Eigen::MatrixXd qs(dz, dz + dt), qr = Eigen::MatrixXd::Zero(dz, dz + dt);
    qs << Eigen::MatrixXd::Identity(dz, dz), d[k];
    qr.leftCols(dz).setIdentity();
    cfg.comm.qs.push_back(qs);
    cfg.comm.qr.push_back(qr);
    cfg.comm.rs.push_back(-Eigen::MatrixXd::Identity(dz, dz));
    cfg.comm.rr.push_back(-Eigen::MatrixXd::Identity(dz, dz));
  }
}

void expand_example3(const Reader& rd, const json& blk, ScenarioConfig& cfg) {
  const std::vector<std::string> path{"example3"};
  const int n = cfg.model.horizon;
  const Eigen::MatrixXd az = rd.matrix(rd.need(blk, "Az", path), extend(path, "Az"));
  const Eigen::MatrixXd at = rd.matrix(rd.need(blk, "Atheta", path), extend(path, "Atheta"));
  const Eigen::MatrixXd bz = rd.matrix(rd.need(blk, "Bz", path), extend(path, "Bz"));
  const Eigen::Index dz = az.rows(), dt = at.rows(), t = bz.cols();
  const Eigen::MatrixXd bt = blk.contains("Btheta")
                                 ? rd.matrix(blk["Btheta"], extend(path, "Btheta"))
                                 : Eigen::MatrixXd::Zero(dt, t);
  if (bz.rows() != dz || bt.rows() != dt || bt.cols() != t) rd.fail(path, "Bz/Btheta shapes do not match Az/Atheta");
  const MatrixList d = rd.stages(rd.need(blk, "D", path), n, extend(path, "D"));
  auto optional_stages = [&](const char* key, Eigen::Index dim) {
    return blk.contains(key) ? rd.stages(blk[key], n, extend(path, key))
                             : MatrixList(n, Eigen::MatrixXd::Identity(dim, dim));
  };
  const MatrixList qtheta = optional_stages("Qtheta", dz);
  const MatrixList qz = optional_stages("Qz", dz);
  cfg.control.rs = optional_stages("RS", t);
  cfg.control.rr = optional_stages("RR", t);

  cfg.model.a = blkdiag(az, at);
  cfg.model.b.resize(dz + dt, t);
  cfg.model.b << bz, bt;
  for (int k = 0; k < n; ++k) {
    if (d[k].rows() != dz || d[k].cols() != dt) {
      rd.fail(extend(path, "D"), "D must be " + std::to_string(dz) + "x" + std::to_string(dt));
    }
    Eigen::MatrixXd sel(dz, dz + dt);
    sel << Eigen::MatrixXd::Identity(dz, dz), -d[k];
    cfg.control.qs.push_back(sel.transpose() * qtheta[k] * sel);
    cfg.control.qr.push_back(blkdiag(qz[k], Eigen::MatrixXd::Zero(dt, dt)));
  }
}

// Best-effort key for a validation message such as "Sigma1 is not ...".
std::vector<std::string> anchor_for(const std::string& message, const ScenarioConfig& cfg) {
  const std::string head = message.substr(0, message.find(' '));
  if (head == "horizon") return {"horizon"};
  if (head == "Sigma1" || head == "SigmaW") return {head};
  const bool cost = head == "QS" || head == "QR" || head == "RS" || head == "RR" ||
                    head.rfind("R_R", 0) == 0 || head == "cost" || head == "Delta";
  if (!cfg.shorthand.empty() && (cost || head == "A" || head == "B")) return {cfg.shorthand};
  if (cost) return {"costs"};
  if (head == "A" || head == "B") return {head};
  return {};
}

}  // namespace

const char* mode_name(GameMode mode) {
  return mode == GameMode::kControl ? "control" : "communication";
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (j.is_number()) return Eigen::MatrixXd::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty()) throw std::invalid_argument("expected a matrix (nested array of rows)");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (!j.front().is_array() || j.front().empty()) {
    throw std::invalid_argument("matrix rows must be non-empty arrays of numbers");
  }
  const auto cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw std::invalid_argument("matrix rows must all have " + std::to_string(cols) + " entries");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw std::invalid_argument("matrix entries must be numbers");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    out.push_back(std::move(row));
  }
  return out;
}

ScenarioConfig parse_config(const std::string& text, const std::string& source,
                            std::optional<int> horizon) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source, line_at(text, e.byte > 0 ? e.byte - 1 : 0), e.what());
  }
  const Reader rd{text, source};
  if (!root.is_object()) rd.fail({}, "top level must be an object");

  ScenarioConfig cfg;
  cfg.source = source;
  cfg.text = text;
  cfg.name = root.value("name", std::string{});

  const std::string mode = root.value("mode", std::string{"communication"});
  if (mode == "communication") {
    cfg.mode = GameMode::kCommunication;
  } else if (mode == "control") {
    cfg.mode = GameMode::kControl;
  } else {
    rd.fail({"mode"}, "must be \"communication\" or \"control\", got \"" + mode + "\"");
  }

  if (horizon) {
    cfg.model.horizon = *horizon;
  } else {
    cfg.model.horizon = rd.number<int>(rd.need(root, "horizon", {}), {"horizon"});
  }
  if (cfg.model.horizon < 1) rd.fail({"horizon"}, "horizon must be at least 1");

  const bool ex1 = root.contains("example1"), ex3 = root.contains("example3");
  if (ex1 && ex3) rd.fail({"example3"}, "example1 and example3 are mutually exclusive");
  if (ex1 && cfg.mode != GameMode::kCommunication) rd.fail({"example1"}, "example1 needs mode \"communication\"");
  if (ex3 && cfg.mode != GameMode::kControl) rd.fail({"example3"}, "example3 needs mode \"control\"");
  if (ex1 || ex3) {
    cfg.shorthand = ex1 ? "example1" : "example3";
    for (const char* key : {"A", "B", "costs"}) {
      if (root.contains(key)) rd.fail({key}, std::string(key) + " conflicts with the " + cfg.shorthand + " block");
    }
  }

  const int n = cfg.model.horizon;
  if (ex1) {
    expand_example1(rd, root["example1"], cfg);
  } else if (ex3) {
    expand_example3(rd, root["example3"], cfg);
  } else {
    cfg.model.a = rd.matrix(rd.need(root, "A", {}), {"A"});
    if (root.contains("B")) cfg.model.b = rd.matrix(root["B"], {"B"});
    const json& costs = rd.need(root, "costs", {});
    auto list = [&](const char* key) {
      return rd.stages(rd.need(costs, key, {"costs"}), n, {"costs", key});
    };
    if (cfg.mode == GameMode::kCommunication) {
      cfg.comm = {list("QS"), list("RS"), list("QR"), list("RR")};
    } else {
      cfg.control = {list("QS"), list("RS"), list("QR"), list("RR")};
    }
  }
  cfg.model.sigma1 = rd.matrix(rd.need(root, "Sigma1", {}), {"Sigma1"});
  cfg.model.sigma_w = rd.matrix(rd.need(root, "SigmaW", {}), {"SigmaW"});

  if (root.contains("solver")) {
    const json& s = root["solver"];
    if (s.contains("tol")) cfg.solver.tol = rd.number<double>(s["tol"], {"solver", "tol"});
    if (s.contains("max_iter")) cfg.solver.max_iter = rd.number<int>(s["max_iter"], {"solver", "max_iter"});
    if (s.contains("polish")) cfg.solver.polish = s["polish"].get<bool>();
    if (!(cfg.solver.tol > 0.0)) rd.fail({"solver", "tol"}, "tol must be positive");
    if (cfg.solver.max_iter < 1) rd.fail({"solver", "max_iter"}, "max_iter must be positive");
  }
  if (root.contains("sim")) {
    const json& s = root["sim"];
    if (s.contains("paths")) cfg.sim.paths = rd.number<std::int64_t>(s["paths"], {"sim", "paths"});
    if (s.contains("seed")) cfg.sim.seed = rd.number<std::uint64_t>(s["seed"], {"sim", "seed"});
    if (cfg.sim.paths < 1) rd.fail({"sim", "paths"}, "paths must be at least 1");
  }

  try {
    validate(cfg.model);
    if (cfg.mode == GameMode::kCommunication) {
      validate(cfg.comm, cfg.model);
    } else {
      validate(cfg.control, cfg.model);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    rd.fail(anchor_for(e.what(), cfg), e.what());
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path, std::optional<int> horizon) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), 0, "cannot open file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.string(), horizon);
}

ScenarioConfig with_horizon(const ScenarioConfig& cfg, int horizon) {
  return parse_config(cfg.text, cfg.source, horizon);
}

json expanded_config(const ScenarioConfig& cfg) {
  json out;
  out["name"] = cfg.name;
  out["mode"] = mode_name(cfg.mode);
  out["horizon"] = cfg.model.horizon;
  if (!cfg.shorthand.empty()) out["expanded_from"] = cfg.shorthand;
  out["A"] = matrix_to_json(cfg.model.a);
  out["B"] = matrix_to_json(cfg.model.b);
  out["Sigma1"] = matrix_to_json(cfg.model.sigma1);
  out["SigmaW"] = matrix_to_json(cfg.model.sigma_w);
  auto list = [](const MatrixList& l) {
    json arr = json::array();
    for (const auto& m : l) arr.push_back(matrix_to_json(m));
    return arr;
  };
  if (cfg.mode == GameMode::kCommunication) {
    out["costs"] = {{"QS", list(cfg.comm.qs)}, {"RS", list(cfg.comm.rs)},
                    {"QR", list(cfg.comm.qr)}, {"RR", list(cfg.comm.rr)}};
  } else {
    out["costs"] = {{"QS", list(cfg.control.qs)}, {"RS", list(cfg.control.rs)},
                    {"QR", list(cfg.control.qr)}, {"RR", list(cfg.control.rr)}};
  }
  out["solver"] = {{"tol", cfg.solver.tol}, {"max_iter", cfg.solver.max_iter}, {"polish", cfg.solver.polish}};
  out["sim"] = {{"paths", cfg.sim.paths}, {"seed", cfg.sim.seed}};
  return out;
}

}  // namespace stackelberg
