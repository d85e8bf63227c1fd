// Copyright 2026 The sepnet Authors
// SPDX-License-Identifier: Apache-2.0

#include "config.hpp"

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

namespace sep::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(s);
  while (std::getline(in, part, sep)) parts.push_back(trim(part));
  return parts;
}

template <class N>
N parse_number(const std::string& text, const std::string& what) {
  N value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty()) {
    throw ArgumentError("invalid " + what + " '" + text + "'");
  }
  return value;
}

const std::set<std::string> kKinds = {"fddem", "msgrb", "ldconv", "dysample", "ca2neck", "fft2"};

// Reads module keys and remembers which ones were used.
class Keys {
 public:
  explicit Keys(const ModuleSection& m) : m_(m) {}

  std::optional<std::string> text(const std::string& key) {
    used_.insert(key);
    auto it = m_.keys.find(key);
    if (it == m_.keys.end()) return std::nullopt;
    return it->second;
  }

  std::optional<Index> integer(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_number<Index>(*t, where(key));
  }

  std::optional<double> real(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    return parse_number<double>(*t, where(key));
  }

  std::optional<std::vector<Index>> list(const std::string& key) {
    auto t = text(key);
    if (!t) return std::nullopt;
    std::vector<Index> out;
    for (const auto& item : split(*t, ',')) out.push_back(parse_number<Index>(item, where(key)));
    return out;
  }

  void reject_unknown() const {
    for (const auto& [key, value] : m_.keys) {
      if (used_.count(key) == 0) {
        throw ArgumentError("line " + std::to_string(m_.line) + ": unknown key '" + key +
                            "' for module " + m_.kind);
      }
    }
  }

  std::string where(const std::string& key) const {
    return "value for '" + key + "' in module " + m_.kind + " (line " + std::to_string(m_.line) + ")";
  }

 private:
  const ModuleSection& m_;
  std::set<std::string> used_;
};

// A declared size must agree with what actually flows into the module.
Index declared(Keys& keys, const std::string& key, Index actual, const std::string& kind) {
  const auto v = keys.integer(key);
  if (v && *v != actual) {
    throw DimensionError(kind + ": declared " + key + " = " + std::to_string(*v) +
                         " but the incoming tensor has " + std::to_string(actual));
  }
  return actual;
}

Index positive(Index v, const std::string& what) {
  if (v < 1) throw ArgumentError(what + " must be >= 1, got " + std::to_string(v));
  return v;
}

const Shape& single_input(const std::vector<Shape>& in, const std::string& kind) {
  if (in.size() != 1) {
    throw DimensionError(kind + " takes one tensor but receives a " + std::to_string(in.size()) +
                         "-level pyramid");
  }
  return in.front();
}

}  // namespace

Shape parse_shape(const std::string& text) {
  const auto dims = split(trim(text), 'x');
  if (dims.size() != 4) throw ArgumentError("shape '" + text + "' must look like NxCxHxW");
  Shape s{};
  s.n = positive(parse_number<Index>(dims[0], "shape dim"), "shape dim");
  s.c = positive(parse_number<Index>(dims[1], "shape dim"), "shape dim");
  s.h = positive(parse_number<Index>(dims[2], "shape dim"), "shape dim");
  s.w = positive(parse_number<Index>(dims[3], "shape dim"), "shape dim");
  return s;
}

std::vector<Shape> parse_shapes(const std::string& text) {
  std::vector<Shape> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_shape(item));
  return out;
}

GraphConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  GraphConfig cfg;
  cfg.base_dir = base_dir;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  enum class Section { None, Global, Module } section = Section::None;
  std::set<std::string> global_keys;
  while (std::getline(in, raw)) {
    ++line;
    const auto cut = raw.find_first_of("#;");
    const std::string l = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (l.empty()) continue;
    const std::string at = "line " + std::to_string(line) + ": ";
    if (l.front() == '[') {
      if (l.back() != ']') throw ArgumentError(at + "unterminated section header");
      const auto words = split(l.substr(1, l.size() - 2), ' ');
      std::vector<std::string> w;
      for (const auto& x : words) {
        if (!x.empty()) w.push_back(x);
      }
      if (w.size() == 1 && w[0] == "global") {
        section = Section::Global;
      } else if (w.size() == 2 && w[0] == "module") {
        if (kKinds.count(w[1]) == 0) throw ArgumentError(at + "unknown module '" + w[1] + "'");
        cfg.modules.push_back(ModuleSection{w[1], line, {}});
        section = Section::Module;
      } else {
        throw ArgumentError(at + "expected [global] or [module NAME]");
      }
      continue;
    }
    const auto eq = l.find('=');
    if (eq == std::string::npos) throw ArgumentError(at + "expected key = value");
    const std::string key = trim(l.substr(0, eq));
    const std::string value = trim(l.substr(eq + 1));
    if (key.empty() || value.empty()) throw ArgumentError(at + "empty key or value");
    switch (section) {
      case Section::None:
        throw ArgumentError(at + "key outside of any section");
      case Section::Global:
        if (!global_keys.insert(key).second) throw ArgumentError(at + "duplicate key '" + key + "'");
        if (key == "seed") {
          try {
            cfg.seed = parse_number<std::uint64_t>(value, "seed");
          } catch (const ArgumentError& e) {
            throw ArgumentError(at + e.what());
          }
        } else if (key == "dtype") {
          if (value == "f32") {
            cfg.dtype = DType::F32;
          } else if (value == "f64") {
            cfg.dtype = DType::F64;
          } else {
            throw ArgumentError(at + "dtype must be f32 or f64");
          }
        } else if (key == "input") {
          try {
            cfg.inputs = parse_shapes(value);
          } catch (const ArgumentError& e) {
            throw ArgumentError(at + e.what());
          }
        } else {
          throw ArgumentError(at + "unknown global key '" + key + "'");
        }
        break;
      case Section::Module: {
        auto& keys = cfg.modules.back().keys;
        if (!keys.emplace(key, value).second) throw ArgumentError(at + "duplicate key '" + key + "'");
        break;
      }
    }
  }
  if (cfg.modules.empty()) throw ArgumentError("config declares no [module ...] section");
  return cfg;
}

GraphConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path.parent_path());
}

std::vector<Stage> resolve(const GraphConfig& cfg, const std::vector<Shape>& inputs) {
  if (inputs.empty()) throw ArgumentError("no input shape: give [global] input or an input file");
  std::vector<Stage> stages;
  std::map<std::string, int> uses;
  std::vector<Shape> flow = inputs;
  for (const auto& m : cfg.modules) {
    Keys keys(m);
    Stage st;
    st.kind = m.kind;
    const int use = uses[m.kind]++;
    st.label = use == 0 ? m.kind : m.kind + "_" + std::to_string(use);
    st.in = flow;

    const std::string src = keys.text("params").value_or("init");
    if (src == "init") {
      st.source = ParamSource::Init;
    } else if (src == "random") {
      st.source = ParamSource::Random;
    } else if (src == "zeros") {
      st.source = ParamSource::Zeros;
    } else if (src.rfind("file:", 0) == 0 && src.size() > 5) {
      st.source = ParamSource::File;
      st.params_file = cfg.base_dir / src.substr(5);
    } else {
      throw ArgumentError(keys.where("params") + ": expected init, random, zeros or file:PATH");
    }

    if (m.kind == "fddem") {
      const Shape& s = single_input(flow, m.kind);
      FddemConfig c;
      c.channels = declared(keys, "channels", s.c, m.kind);
      c.height = declared(keys, "height", s.h, m.kind);
      c.width = declared(keys, "width", s.w, m.kind);
      c.branches = positive(keys.integer("branches").value_or(3), keys.where("branches"));
      c.reduction = positive(keys.integer("reduction").value_or(4), keys.where("reduction"));
      if (c.channels < c.reduction) {
        throw DimensionError("fddem: " + std::to_string(c.channels) +
                             " channels is fewer than the reduction ratio " + std::to_string(c.reduction));
      }
      st.config = c;
    } else if (m.kind == "msgrb") {
      const Shape& s = single_input(flow, m.kind);
      MsgrbConfig c;
      c.channels = declared(keys, "channels", s.c, m.kind);
      if (auto k = keys.list("kernels")) c.kernels = *k;
      for (Index k : c.kernels) {
        if (k < 1 || k % 2 == 0) throw ArgumentError(keys.where("kernels") + ": sizes must be odd and >= 1");
      }
      st.config = c;
    } else if (m.kind == "ldconv") {
      const Shape& s = single_input(flow, m.kind);
      LdconvConfig c;
      c.in_channels = declared(keys, "channels", s.c, m.kind);
      c.out_channels = positive(keys.integer("out_channels").value_or(s.c), keys.where("out_channels"));
      c.points = positive(keys.integer("points").value_or(5), keys.where("points"));
      c.stride = positive(keys.integer("stride").value_or(1), keys.where("stride"));
      st.config = c;
      flow = {Shape{s.n, c.out_channels, ldconv_output_size(s.h, c.stride),
                    ldconv_output_size(s.w, c.stride)}};
    } else if (m.kind == "dysample") {
      const Shape& s = single_input(flow, m.kind);
      DysampleConfig c;
      c.channels = declared(keys, "channels", s.c, m.kind);
      c.scale = keys.integer("scale").value_or(2);
      if (c.scale < 2) throw ArgumentError(keys.where("scale") + ": must be >= 2");
      c.groups = positive(keys.integer("groups").value_or(1), keys.where("groups"));
      c.scope = keys.real("scope").value_or(0.25);
      if (!(c.scope >= 0.0)) throw ArgumentError(keys.where("scope") + ": must be >= 0");
      if (c.channels % c.groups != 0) {
        throw DimensionError("dysample: " + std::to_string(c.channels) + " channels do not split into " +
                             std::to_string(c.groups) + " groups");
      }
      st.config = c;
      flow = {Shape{s.n, s.c, s.h * c.scale, s.w * c.scale}};
    } else if (m.kind == "ca2neck") {
      if (flow.size() != 3) {
        throw DimensionError("ca2neck takes a 3-level pyramid but receives " + std::to_string(flow.size()) +
                             " tensor(s)");
      }
      NeckConfig c;
      for (std::size_t l = 0; l < 3; ++l) c.channels[l] = flow[l].c;
      if (auto ch = keys.list("channels")) {
        if (ch->size() != 3) throw ArgumentError(keys.where("channels") + ": expected three counts");
        for (std::size_t l = 0; l < 3; ++l) {
          if ((*ch)[l] != flow[l].c) {
            throw DimensionError("ca2neck: declared level " + std::to_string(l) + " channels " +
                                 std::to_string((*ch)[l]) + " but the input has " + std::to_string(flow[l].c));
          }
        }
      }
      c.points = positive(keys.integer("points").value_or(5), keys.where("points"));
      c.groups = positive(keys.integer("groups").value_or(1), keys.where("groups"));
      c.scope = keys.real("scope").value_or(0.25);
      if (!(c.scope >= 0.0)) throw ArgumentError(keys.where("scope") + ": must be >= 0");
      if (auto k = keys.list("kernels")) c.kernels = *k;
      neck_check_levels(c, {flow[0], flow[1], flow[2]});
      st.config = c;
    } else {  // fft2
      single_input(flow, m.kind);
      FftStage c;
      const std::string path = keys.text("path").value_or("auto");
      if (path == "fast") {
        c.path = FftPath::Fast;
        if (!is_power_of_two(flow[0].h) || !is_power_of_two(flow[0].w)) {
          throw DimensionError("fft2: fast path needs power-of-two sizes, got " + flow[0].str());
        }
      } else if (path == "naive") {
        c.path = FftPath::Naive;
      } else if (path != "auto") {
        throw ArgumentError(keys.where("path") + ": expected fast, naive or auto");
      }
      if (st.source != ParamSource::Init) throw ArgumentError("fft2 has no parameters");
      st.config = c;
    }
    keys.reject_unknown();
    st.out = flow;
    stages.push_back(std::move(st));
  }
  return stages;
}

}  // namespace sep::cli
