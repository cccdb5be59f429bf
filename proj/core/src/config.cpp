#include "c2f/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "c2f/error.hpp"

namespace c2f {

Stage stage_from_string(const std::string& s) {
  if (s == "coarse") return Stage::coarse;
  if (s == "fine") return Stage::fine;
  if (s == "abnormal") return Stage::abnormal;
  throw Error("stage must be coarse, fine, or abnormal; got '" + s + "'");
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::coarse: return "coarse";
    case Stage::fine: return "fine";
    case Stage::abnormal: return "abnormal";
  }
  return "?";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& v) {
  T out{};
  const char* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || p != end) throw FormatError("config: bad value '" + v + "' for " + key);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) throw FormatError("config: non-finite value for " + key);
  }
  return out;
}

std::size_t parse_count(const std::string& key, const std::string& v) {
  return parse_number<std::size_t>(key, v);
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw FormatError("config: bad boolean '" + v + "' for " + key);
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto f32 = [](auto member) {
      return [member](RunConfig& c, const std::string& k, const std::string& v) {
        member(c) = parse_number<float>(k, v);
      };
    };
    auto count = [](auto member) {
      return [member](RunConfig& c, const std::string& k, const std::string& v) {
        member(c) = parse_count(k, v);
      };
    };
    t["spacing_d"] = f32([](RunConfig& c) -> float& { return c.pipeline.normalized_spacing.d; });
    t["spacing_h"] = f32([](RunConfig& c) -> float& { return c.pipeline.normalized_spacing.h; });
    t["spacing_w"] = f32([](RunConfig& c) -> float& { return c.pipeline.normalized_spacing.w; });
    t["coarse_rows"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.coarse_dims.rows; });
    t["coarse_cols"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.coarse_dims.cols; });
    t["fine_rows"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.fine_dims.rows; });
    t["fine_cols"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.fine_dims.cols; });
    t["abnormal_depth"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.abnormal_dims.rows; });
    t["abnormal_rows"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.abnormal_dims.cols; });
    t["th_vn"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.th_vn; });
    t["fine_slice_margin"] = count([](RunConfig& c) -> std::size_t& { return c.pipeline.fine_slice_margin; });
    t["prob_threshold"] = f32([](RunConfig& c) -> float& { return c.pipeline.prob_threshold; });
    t["connectivity"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.pipeline.connectivity = connectivity_from_int(parse_number<int>(k, v));
    };
    t["unet_base_channels"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.unet.base_channels = parse_number<int>(k, v);
    };
    t["unet_depth"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.unet.depth = parse_number<int>(k, v);
    };
    t["retain_empty_slices"] = [](RunConfig& c, const std::string& k, const std::string& v) {
      c.retain_empty_slices = parse_bool(k, v);
    };
    t["nifti_depth_axis"] = [](RunConfig& c, const std::string&, const std::string& v) {
      c.nifti_depth_axis = nifti_depth_axis_from_string(v);
    };
    t["phantom_depth"] = count([](RunConfig& c) -> std::size_t& { return c.phantom.dims.depth; });
    t["phantom_rows"] = count([](RunConfig& c) -> std::size_t& { return c.phantom.dims.rows; });
    t["phantom_cols"] = count([](RunConfig& c) -> std::size_t& { return c.phantom.dims.cols; });
    t["phantom_spacing_d"] = f32([](RunConfig& c) -> float& { return c.phantom.spacing.d; });
    t["phantom_spacing_h"] = f32([](RunConfig& c) -> float& { return c.phantom.spacing.h; });
    t["phantom_spacing_w"] = f32([](RunConfig& c) -> float& { return c.phantom.spacing.w; });
    t["phantom_noise_sigma"] = f32([](RunConfig& c) -> float& { return c.phantom.noise_sigma; });
    t["phantom_kidney_intensity"] = f32([](RunConfig& c) -> float& { return c.phantom.kidney_intensity; });
    t["phantom_background_intensity"] =
        f32([](RunConfig& c) -> float& { return c.phantom.background_intensity; });

    // Training keys: base name sets all stages, suffixed name one stage.
    using HyperSetter = std::function<void(TrainHyper&, const std::string&, const std::string&)>;
    const std::vector<std::pair<std::string, HyperSetter>> hyper = {
        {"lr", [](TrainHyper& h, const std::string& k, const std::string& v) { h.lr = parse_number<double>(k, v); }},
        {"momentum", [](TrainHyper& h, const std::string& k, const std::string& v) { h.momentum = parse_number<double>(k, v); }},
        {"epochs", [](TrainHyper& h, const std::string& k, const std::string& v) { h.epochs = parse_number<int>(k, v); }},
        {"batch", [](TrainHyper& h, const std::string& k, const std::string& v) { h.batch = parse_number<int>(k, v); }},
        {"seed", [](TrainHyper& h, const std::string& k, const std::string& v) { h.seed = parse_number<std::uint64_t>(k, v); }},
        {"samples_per_epoch", [](TrainHyper& h, const std::string& k, const std::string& v) { h.samples_per_epoch = parse_count(k, v); }},
        {"clip_norm", [](TrainHyper& h, const std::string& k, const std::string& v) { h.clip_norm = parse_number<double>(k, v); }},
    };
    for (const auto& [name, set] : hyper) {
      t[name] = [set](RunConfig& c, const std::string& k, const std::string& v) {
        for (auto& h : c.train) set(h, k, v);
      };
      for (Stage s : {Stage::coarse, Stage::fine, Stage::abnormal}) {
        t[name + "_" + to_string(s)] = [set, s](RunConfig& c, const std::string& k, const std::string& v) {
          set(c.train[std::size_t(s)], k, v);
        };
      }
    }
    return t;
  }();
  return table;
}

bool is_stage_override(const std::string& key) {
  for (const char* suffix : {"_coarse", "_fine", "_abnormal"}) {
    const std::string s(suffix);
    if (key.size() > s.size() && key.compare(key.size() - s.size(), s.size(), s) == 0 &&
        !key.starts_with("phantom_")) {
      return true;
    }
  }
  return false;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  struct Entry {
    std::string key, value;
    int line;
  };
  std::vector<Entry> entries;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (!setters().contains(e.key)) {
      throw FormatError("config line " + std::to_string(line_no) + ": unknown key '" + e.key + "'");
    }
    if (!seen.insert(e.key).second) {
      throw FormatError("config line " + std::to_string(line_no) + ": duplicate key '" + e.key + "'");
    }
    entries.push_back(std::move(e));
  }

  RunConfig cfg;
  // Stage-specific overrides win regardless of their position in the file.
  for (int pass = 0; pass < 2; ++pass) {
    for (const auto& e : entries) {
      if (is_stage_override(e.key) != (pass == 1)) continue;
      try {
        setters().at(e.key)(cfg, e.key, e.value);
      } catch (const Error& err) {
        throw FormatError("config line " + std::to_string(e.line) + ": " + err.what());
      }
    }
  }
  try {
    cfg.unet.validate();
    cfg.pipeline.validate();
  } catch (const Error& err) {
    throw FormatError(std::string("config: ") + err.what());
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::string format_config(const RunConfig& c) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<float>::max_digits10);
  const auto& p = c.pipeline;
  os << "spacing_d = " << p.normalized_spacing.d << "\n"
     << "spacing_h = " << p.normalized_spacing.h << "\n"
     << "spacing_w = " << p.normalized_spacing.w << "\n"
     << "coarse_rows = " << p.coarse_dims.rows << "\n"
     << "coarse_cols = " << p.coarse_dims.cols << "\n"
     << "fine_rows = " << p.fine_dims.rows << "\n"
     << "fine_cols = " << p.fine_dims.cols << "\n"
     << "abnormal_depth = " << p.abnormal_dims.rows << "\n"
     << "abnormal_rows = " << p.abnormal_dims.cols << "\n"
     << "th_vn = " << p.th_vn << "\n"
     << "prob_threshold = " << p.prob_threshold << "\n"
     << "connectivity = " << int(p.connectivity) << "\n"
     << "fine_slice_margin = " << p.fine_slice_margin << "\n"
     << "unet_base_channels = " << c.unet.base_channels << "\n"
     << "unet_depth = " << c.unet.depth << "\n"
     << "retain_empty_slices = " << (c.retain_empty_slices ? "true" : "false") << "\n"
     << "nifti_depth_axis = " << to_string(c.nifti_depth_axis) << "\n"
     << "phantom_depth = " << c.phantom.dims.depth << "\n"
     << "phantom_rows = " << c.phantom.dims.rows << "\n"
     << "phantom_cols = " << c.phantom.dims.cols << "\n"
     << "phantom_spacing_d = " << c.phantom.spacing.d << "\n"
     << "phantom_spacing_h = " << c.phantom.spacing.h << "\n"
     << "phantom_spacing_w = " << c.phantom.spacing.w << "\n"
     << "phantom_noise_sigma = " << c.phantom.noise_sigma << "\n"
     << "phantom_kidney_intensity = " << c.phantom.kidney_intensity << "\n"
     << "phantom_background_intensity = " << c.phantom.background_intensity << "\n";
  os << std::setprecision(std::numeric_limits<double>::max_digits10);
  for (Stage s : {Stage::coarse, Stage::fine, Stage::abnormal}) {
    const auto& h = c.hyper(s);
    const std::string sfx = "_" + to_string(s);
    os << "lr" << sfx << " = " << h.lr << "\n"
       << "momentum" << sfx << " = " << h.momentum << "\n"
       << "epochs" << sfx << " = " << h.epochs << "\n"
       << "batch" << sfx << " = " << h.batch << "\n"
       << "seed" << sfx << " = " << h.seed << "\n"
       << "samples_per_epoch" << sfx << " = " << h.samples_per_epoch << "\n"
       << "clip_norm" << sfx << " = " << h.clip_norm << "\n";
  }
  return os.str();
}

}  // namespace c2f
