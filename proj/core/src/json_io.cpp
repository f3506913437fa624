#include "isskit/json_io.hpp"

#include <filesystem>
#include <fstream>

namespace isskit {

nlohmann::json kfun_to_json(const KFun& f) {
  nlohmann::json j;
  switch (f.kind()) {
    case KFun::Kind::PowerLaw:
      j["kind"] = "power";
      j["coeff"] = f.coeff();
      j["expo"] = f.expo();
      break;
    case KFun::Kind::PiecewisePower: {
      j["kind"] = "piecewise_power";
      nlohmann::json segs = nlohmann::json::array();
      for (const auto& s : f.segments()) {
        segs.push_back({{"r_lo", s.r_lo}, {"coeff", s.coeff}, {"expo", s.expo}});
      }
      j["segments"] = std::move(segs);
      break;
    }
    case KFun::Kind::Tabulated: {
      j["kind"] = "table";
      nlohmann::json pts = nlohmann::json::array();
      for (const auto& p : f.points()) pts.push_back({p[0], p[1]});
      j["points"] = std::move(pts);
      break;
    }
  }
  return j;
}

KFun kfun_from_json(const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "power") {
    return KFun::power(j.at("coeff").get<double>(), j.at("expo").get<double>());
  }
  if (kind == "piecewise_power") {
    std::vector<KFun::Segment> segs;
    for (const auto& s : j.at("segments")) {
      segs.push_back({s.at("r_lo").get<double>(), s.at("coeff").get<double>(),
                      s.at("expo").get<double>()});
    }
    return KFun::piecewise(std::move(segs));
  }
  if (kind == "table") {
    std::vector<std::array<double, 2>> pts;
    for (const auto& p : j.at("points")) {
      pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    return KFun::table(std::move(pts));
  }
  throw Error("kfun_from_json: unknown kind '" + kind + "'");
}

nlohmann::json gain_matrix_to_json(const GainMatrix& g) {
  nlohmann::json j;
  j["n"] = g.size();
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [to, from] : g.edges()) {
    edges.push_back({{"from", from + 1}, {"to", to + 1}, {"gain", kfun_to_json(*g.entry(to, from))}});
  }
  j["edges"] = std::move(edges);
  nlohmann::json ig = nlohmann::json::array();
  bool any = false;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.input_gain(i)) {
      ig.push_back(kfun_to_json(*g.input_gain(i)));
      any = true;
    } else {
      ig.push_back(nullptr);
    }
  }
  if (any) j["input_gains"] = std::move(ig);
  return j;
}

GainMatrix gain_matrix_from_json(const nlohmann::json& j) {
  GainMatrix g(j.at("n").get<std::size_t>());
  for (const auto& e : j.value("edges", nlohmann::json::array())) {
    const auto to = e.at("to").get<std::size_t>();
    const auto from = e.at("from").get<std::size_t>();
    if (to < 1 || from < 1) throw Error("gain_matrix_from_json: indices are 1-based");
    g.set(to - 1, from - 1, kfun_from_json(e.at("gain")));
  }
  if (j.contains("input_gains")) {
    const auto& ig = j["input_gains"];
    for (std::size_t i = 0; i < ig.size() && i < g.size(); ++i) {
      if (!ig[i].is_null()) g.set_input_gain(i, kfun_from_json(ig[i]));
    }
  }
  return g;
}

namespace {

nlohmann::json map_to_json(const NonlinMap& m) {
  nlohmann::json j{{"id", m.id}};
  if (m.id == "power_m") j["param"] = m.param;
  return j;
}

NonlinMap map_from_json(const nlohmann::json& j) {
  NonlinMap m;
  m.id = j.at("id").get<std::string>();
  m.param = j.value("param", 1.0);
  registry_validate(m);
  return m;
}

std::string bc_name(BoundaryCondition bc) {
  return bc == BoundaryCondition::Dirichlet0 ? "dirichlet" : "neumann";
}

BoundaryCondition bc_from_name(const std::string& s) {
  if (s == "dirichlet") return BoundaryCondition::Dirichlet0;
  if (s == "neumann") return BoundaryCondition::Neumann0;
  throw Error("unknown boundary condition '" + s + "'");
}

}  // namespace

nlohmann::json system_spec_to_json(const SystemSpec& spec) {
  nlohmann::json j;
  j["grid"] = {{"d", spec.grid.d}, {"n_interior", spec.grid.n_interior}};
  j["species"] = spec.n_species;
  j["diffusion"] = spec.diffusion;
  nlohmann::json bcs = nlohmann::json::array();
  for (auto b : spec.bc) bcs.push_back(bc_name(b));
  j["bc"] = std::move(bcs);
  nlohmann::json R = nlohmann::json::array();
  for (int i = 0; i < spec.n_species; ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < spec.n_species; ++k) row.push_back(spec.linear_coupling(i, k));
    R.push_back(std::move(row));
  }
  j["linear_coupling"] = std::move(R);
  nlohmann::json reactions = nlohmann::json::array();
  for (const auto& t : spec.reactions) {
    reactions.push_back({{"target", t.target + 1},
                         {"source", t.source + 1},
                         {"map", map_to_json(t.map)},
                         {"coeff", t.coeff}});
  }
  j["reactions"] = std::move(reactions);
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& t : spec.inputs) {
    inputs.push_back({{"target", t.target + 1},
                      {"channel", t.channel + 1},
                      {"map", map_to_json(t.map)},
                      {"coeff", t.coeff}});
  }
  j["inputs"] = std::move(inputs);
  j["channels"] = spec.n_channels;
  return j;
}

SystemSpec system_spec_from_json(const nlohmann::json& j) {
  SystemSpec spec;
  spec.grid = Grid1D(j.at("grid").at("d").get<double>(),
                     j.at("grid").at("n_interior").get<int>());
  spec.n_species = j.at("species").get<int>();
  spec.diffusion = j.at("diffusion").get<std::vector<double>>();
  for (const auto& b : j.at("bc")) spec.bc.push_back(bc_from_name(b.get<std::string>()));
  spec.linear_coupling = Eigen::MatrixXd::Zero(spec.n_species, spec.n_species);
  const auto& R = j.at("linear_coupling");
  for (int i = 0; i < spec.n_species; ++i) {
    for (int k = 0; k < spec.n_species; ++k) {
      spec.linear_coupling(i, k) = R.at(i).at(k).get<double>();
    }
  }
  for (const auto& t : j.value("reactions", nlohmann::json::array())) {
    spec.reactions.push_back({t.at("target").get<int>() - 1, t.at("source").get<int>() - 1,
                              map_from_json(t.at("map")), t.value("coeff", 1.0)});
  }
  for (const auto& t : j.value("inputs", nlohmann::json::array())) {
    spec.inputs.push_back({t.at("target").get<int>() - 1, t.at("channel").get<int>() - 1,
                           map_from_json(t.at("map")), t.value("coeff", 1.0)});
  }
  spec.n_channels = j.value("channels", 0);
  spec.validate();
  return spec;
}

nlohmann::json input_signal_to_json(const InputSignal& u) {
  if (u.is_callback()) throw Error("input_signal_to_json: callback signals are not serializable");
  nlohmann::json channels = nlohmann::json::array();
  for (const auto& c : u.channels()) {
    nlohmann::json time;
    switch (c.time_kind) {
      case InputSignal::Channel::TimeKind::Const:
        time = {{"kind", "const"}, {"amp", c.amp}};
        break;
      case InputSignal::Channel::TimeKind::Exp:
        time = {{"kind", "exp"}, {"amp", c.amp}, {"rate", c.rate}};
        break;
      case InputSignal::Channel::TimeKind::PCTable:
        time = {{"kind", "pc_table"}, {"t", c.t_nodes}, {"v", c.t_values}};
        break;
    }
    nlohmann::json profile;
    switch (c.profile_kind) {
      case InputSignal::Channel::ProfileKind::Const:
        profile = {{"kind", "const"}};
        break;
      case InputSignal::Channel::ProfileKind::Sine:
        profile = {{"kind", "sine"}, {"mode", c.mode}};
        break;
      case InputSignal::Channel::ProfileKind::Cosine:
        profile = {{"kind", "cosine"}, {"mode", c.mode}};
        break;
      case InputSignal::Channel::ProfileKind::Gauss:
        profile = {{"kind", "gauss"}, {"center", c.center}, {"width", c.width}};
        break;
    }
    channels.push_back({{"time", time}, {"profile", profile}});
  }
  return {{"channels", channels}};
}

InputSignal input_signal_from_json(const nlohmann::json& j) {
  std::vector<InputSignal::Channel> channels;
  for (const auto& cj : j.at("channels")) {
    InputSignal::Channel c;
    const auto& time = cj.at("time");
    const std::string tk = time.at("kind").get<std::string>();
    if (tk == "const") {
      c.time_kind = InputSignal::Channel::TimeKind::Const;
      c.amp = time.at("amp").get<double>();
    } else if (tk == "exp") {
      c.time_kind = InputSignal::Channel::TimeKind::Exp;
      c.amp = time.at("amp").get<double>();
      c.rate = time.at("rate").get<double>();
    } else if (tk == "pc_table") {
      c.time_kind = InputSignal::Channel::TimeKind::PCTable;
      c.t_nodes = time.at("t").get<std::vector<double>>();
      c.t_values = time.at("v").get<std::vector<double>>();
    } else {
      throw Error("input_signal_from_json: unknown time kind '" + tk + "'");
    }
    const auto& profile = cj.at("profile");
    const std::string pk = profile.at("kind").get<std::string>();
    if (pk == "const") {
      c.profile_kind = InputSignal::Channel::ProfileKind::Const;
    } else if (pk == "sine") {
      c.profile_kind = InputSignal::Channel::ProfileKind::Sine;
      c.mode = profile.value("mode", 1);
    } else if (pk == "cosine") {
      c.profile_kind = InputSignal::Channel::ProfileKind::Cosine;
      c.mode = profile.value("mode", 1);
    } else if (pk == "gauss") {
      c.profile_kind = InputSignal::Channel::ProfileKind::Gauss;
      c.center = profile.value("center", 0.5);
      c.width = profile.value("width", 0.1);
    } else {
      throw Error("input_signal_from_json: unknown profile kind '" + pk + "'");
    }
    channels.push_back(std::move(c));
  }
  return InputSignal::from_channels(std::move(channels));
}

LyapunovFn lyapunov_from_json(const SystemSpec& spec, const nlohmann::json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  LyapunovFn V = [&]() -> LyapunovFn {
    if (kind == "energy") {
      return LyapunovFn::energy(map_from_json(j.at("reaction")), j.value("species", 1) - 1);
    }
    if (kind == "norm_power") {
      const std::string nm = j.at("norm").get<std::string>();
      NormKind norm;
      if (nm == "L2") {
        norm = NormKind::L2;
      } else if (nm == "L4") {
        norm = NormKind::L4;
      } else if (nm == "H10") {
        norm = NormKind::H10;
      } else if (nm == "Sup") {
        norm = NormKind::Sup;
      } else {
        throw Error("lyapunov_from_json: unknown norm '" + nm + "'");
      }
      return LyapunovFn::norm_power(norm, j.value("power", 2.0), j.value("coeff", 1.0),
                                    j.value("species", 1) - 1);
    }
    if (kind == "quadratic") {
      const std::string source = j.value("source", "solve");
      if (source != "solve") {
        throw Error("lyapunov_from_json: quadratic forms are built via source='solve'");
      }
      SystemSpec linear = spec;
      linear.reactions.clear();
      linear.inputs.clear();
      linear.n_channels = 0;
      const auto sol =
          solve_lyapunov(Eigen::MatrixXd(linear_generator(linear)), stacked_weights(spec));
      return LyapunovFn::quadratic(spec, sol.quad);
    }
    throw Error("lyapunov_from_json: unknown kind '" + kind + "'");
  }();
  if (j.contains("gain")) V = V.with_gain(kfun_from_json(j["gain"]));
  if (j.contains("alpha")) V = V.with_decay(kfun_from_json(j["alpha"]));
  return V;
}

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  nlohmann::json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const nlohmann::json& j) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << j.dump(2) << '\n';
}

}  // namespace isskit
