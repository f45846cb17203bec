#pragma once

#include "msgfem/pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace msgfem {

/// Everything a run needs, read from an INI file with units in the key names.
struct RunConfig {
  ProblemSpec problem;
  DecompositionSpec decomposition;
  SpectralRequest spectral;
  PcgOptions pcg;
  double schwarz_threshold = 2.0; ///< 1/lambda threshold for the GenEO coarse space in PCG
  std::vector<int> sweep_modes{10, 20, 40};
  std::vector<int> sweep_oversampling{1, 2, 3, 4};
  std::vector<double> sweep_thresholds{1e-5};
  std::vector<int> compare_modes{20, 40};
  double shear_strength = 0; ///< S_L, MPa; zero disables the failure field
  double eta = 0;
  Index spectra_rows = -1;   ///< eigenvalues written per subdomain, -1 for all
  bool export_matrix = false;
};

namespace detail {

using Tree = boost::property_tree::ptree;

template <class T>
T parse_scalar(const std::string& key, const std::string& text)
{
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in.fail() && !in.eof()) in >> std::ws;
  if (in.fail() || !in.eof()) throw ConfigError("config: '" + key + "' has malformed value '" + text + "'");
  return v;
}

template <class T>
std::vector<T> parse_list(const std::string& key, const std::string& text)
{
  std::vector<T> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b == std::string::npos) throw ConfigError("config: '" + key + "' has an empty list entry");
    out.push_back(parse_scalar<T>(key, item.substr(b, e - b + 1)));
  }
  if (out.empty()) throw ConfigError("config: '" + key + "' is an empty list");
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& text)
{
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError("config: '" + key + "' must be true or false");
}

/// Reads keys of one section and rejects keys nobody asked for.
class Section {
public:
  Section(const Tree& root, const std::string& name) : name_(name)
  {
    if (auto child = root.get_child_optional(name)) tree_ = *child;
  }

  bool has(const std::string& key) const { return tree_.get_child_optional(key).has_value(); }

  std::string raw(const std::string& key)
  {
    used_.insert(key);
    return tree_.get<std::string>(key);
  }

  template <class T>
  void read(const std::string& key, T& target)
  {
    if (has(key)) target = parse_scalar<T>(name_ + "." + key, raw(key));
  }

  template <class T>
  void read_list(const std::string& key, std::vector<T>& target)
  {
    if (has(key)) target = parse_list<T>(name_ + "." + key, raw(key));
  }

  void read_bool(const std::string& key, bool& target)
  {
    if (has(key)) target = parse_bool(name_ + "." + key, raw(key));
  }

  void finish() const
  {
    for (const auto& kv : tree_)
      if (!used_.count(kv.first)) throw ConfigError("config: unknown key '" + name_ + "." + kv.first + "'");
  }

private:
  std::string name_;
  Tree tree_;
  std::set<std::string> used_;
};

inline BoundaryKind parse_boundary_kind(const std::string& key, const std::string& text)
{
  if (text == "free") return BoundaryKind::free;
  if (text == "neumann") return BoundaryKind::neumann;
  if (text == "dirichlet") return BoundaryKind::dirichlet;
  throw ConfigError("config: '" + key + "' must be free, neumann or dirichlet");
}

inline Point parse_vector(const std::string& key, const std::string& text)
{
  const auto v = parse_list<double>(key, text);
  if (v.size() != 3) throw ConfigError("config: '" + key + "' needs three components");
  return {v[0], v[1], v[2]};
}

} // namespace detail

inline RunConfig parse_config(std::istream& in)
{
  detail::Tree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  static const std::set<std::string> known{"geometry", "material", "laminate", "boundary", "decomposition",
                                           "spectral", "solver",   "sweep",    "failure",  "output"};
  for (const auto& kv : root)
    if (!known.count(kv.first)) throw ConfigError("config: unknown section '" + kv.first + "'");

  RunConfig c;
  auto& ps = c.problem;
  {
    detail::Section s(root, "geometry");
    s.read("dimension", ps.dimension);
    s.read("length_mm", ps.extents[0]);
    s.read("width_mm", ps.extents[1]);
    s.read("thickness_mm", ps.extents[2]);
    s.read("elements_x", ps.counts[0]);
    s.read("elements_y", ps.counts[1]);
    s.read("elements_z", ps.counts[2]);
    s.finish();
    if (ps.dimension != 2 && ps.dimension != 3) throw ConfigError("config: geometry.dimension must be 2 or 3");
    if (ps.dimension == 2) {
      // 2D: x is the length, y the thickness direction (stacking axis)
      ps.extents = {ps.extents[0], ps.extents[2], 0.0};
      ps.counts = {ps.counts[0], ps.counts[2], 1};
    }
  }
  OrthotropicMaterial base;
  {
    detail::Section s(root, "material");
    s.read("E1_MPa", base.E1);
    s.read("E2_MPa", base.E2);
    s.read("E3_MPa", base.E3);
    s.read("G12_MPa", base.G12);
    s.read("G13_MPa", base.G13);
    s.read("G23_MPa", base.G23);
    s.read("nu12", base.nu12);
    s.read("nu13", base.nu13);
    s.read("nu23", base.nu23);
    s.finish();
  }
  {
    detail::Section s(root, "laminate");
    std::vector<double> angles{0.0};
    s.read_list("angles_deg", angles);
    s.read_list("thickness_fractions", ps.ply_fractions);
    s.finish();
    ps.materials.clear();
    for (double a : angles) {
      auto m = base;
      m.angle_deg = a;
      ps.materials.push_back(m);
    }
  }
  {
    detail::Section s(root, "boundary");
    for (int f = 0; f < 6; ++f) {
      const std::string face = face_names[f];
      if (s.has(face)) ps.rule.faces[static_cast<std::size_t>(f)] = detail::parse_boundary_kind("boundary." + face, s.raw(face));
      const std::string disp = face + "_displacement_mm", trac = face + "_traction_MPa";
      if (s.has(disp) && s.has(trac)) throw ConfigError("config: boundary." + face + " has both displacement and traction");
      if (s.has(disp)) ps.face_values[static_cast<std::size_t>(f)] = detail::parse_vector("boundary." + disp, s.raw(disp));
      if (s.has(trac)) ps.face_values[static_cast<std::size_t>(f)] = detail::parse_vector("boundary." + trac, s.raw(trac));
    }
    if (s.has("body_force_N_per_mm3")) ps.body_force = detail::parse_vector("boundary.body_force_N_per_mm3", s.raw("body_force_N_per_mm3"));
    s.finish();
  }
  {
    detail::Section s(root, "decomposition");
    auto& d = c.decomposition;
    s.read("subdomains", d.subdomains);
    if (s.has("strategy")) {
      const auto v = s.raw("strategy");
      if (v == "structured") d.strategy = PartitionStrategy::structured_blocks;
      else if (v == "greedy") d.strategy = PartitionStrategy::greedy_graph;
      else throw ConfigError("config: decomposition.strategy must be structured or greedy");
    }
    if (s.has("blocks")) {
      const auto b = detail::parse_list<int>("decomposition.blocks", s.raw("blocks"));
      if (b.size() != 3) throw ConfigError("config: decomposition.blocks needs three entries");
      d.blocks = {b[0], b[1], b[2]};
    }
    s.read("overlap_layers", d.overlap);
    s.read("oversampling_layers", d.oversampling);
    s.finish();
  }
  {
    detail::Section s(root, "spectral");
    if (s.has("modes")) c.spectral.modes = detail::parse_scalar<int>("spectral.modes", s.raw("modes"));
    if (s.has("threshold")) c.spectral.threshold = detail::parse_scalar<double>("spectral.threshold", s.raw("threshold"));
    s.read_bool("modes_beyond_zero", c.spectral.beyond_zero_modes);
    s.read("shift", c.spectral.shift);
    s.finish();
    if (c.spectral.modes && c.spectral.threshold) throw ConfigError("config: spectral.modes and spectral.threshold are exclusive");
    if (!c.spectral.modes && !c.spectral.threshold) c.spectral.threshold = 1e-3;
  }
  {
    detail::Section s(root, "solver");
    s.read("tolerance", c.pcg.tolerance);
    s.read("max_iterations", c.pcg.max_iterations);
    s.read("schwarz_threshold", c.schwarz_threshold);
    s.finish();
  }
  {
    detail::Section s(root, "sweep");
    s.read_list("modes", c.sweep_modes);
    s.read_list("oversampling_layers", c.sweep_oversampling);
    s.read_list("thresholds", c.sweep_thresholds);
    s.read_list("compare_modes", c.compare_modes);
    s.finish();
  }
  {
    detail::Section s(root, "failure");
    s.read("shear_strength_MPa", c.shear_strength);
    s.read("eta", c.eta);
    s.finish();
  }
  {
    detail::Section s(root, "output");
    s.read("spectra_rows", c.spectra_rows);
    s.read_bool("export_matrix", c.export_matrix);
    s.finish();
  }
  return c;
}

inline RunConfig load_config(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  return parse_config(in);
}

} // namespace msgfem
