#include "lark/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <utility>

#include "lark/errors.hpp"
#include "lark/landmark_io.hpp"

namespace lark {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

template <class T>
T parse_num(std::string_view key, std::string_view v) {
  T out{};
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw Error(ErrorKind::kArgument, "config key '" + std::string(key) + "': cannot parse '" +
                                          std::string(v) + "'");
  }
  return out;
}

std::vector<GridPoint> parse_grid(std::string_view v) {
  if (v == "full") return full_grid();
  std::vector<GridPoint> grid;
  std::size_t start = 0;
  while (start <= v.size()) {
    const std::size_t at = v.find(',', start);
    const std::string_view item = trim(v.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
    if (!item.empty()) grid.push_back(GridPoint::parse(std::string(item)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  if (grid.empty()) throw Error(ErrorKind::kArgument, "config key 'grid' is empty");
  return grid;
}

std::string format_grid(const std::vector<GridPoint>& grid) {
  std::string out;
  for (const auto& p : grid) {
    if (!out.empty()) out += ',';
    out += p.id();
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
Field number_field(std::string key, T RunConfig::*member) {
  return {key,
          [key, member](RunConfig& c, std::string_view v) { c.*member = parse_num<T>(key, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.*member);
            else return std::to_string(c.*member);
          }};
}

template <class T>
Field train_field(std::string key, T TrainConfig::*member) {
  return {key,
          [key, member](RunConfig& c, std::string_view v) { c.train.*member = parse_num<T>(key, v); },
          [member](const RunConfig& c) {
            if constexpr (std::is_floating_point_v<T>) return format_double(c.train.*member);
            else return std::to_string(c.train.*member);
          }};
}

Field string_field(std::string key, std::string RunConfig::*member) {
  return {key, [member](RunConfig& c, std::string_view v) { c.*member = std::string(v); },
          [member](const RunConfig& c) { return c.*member; }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      number_field("seed", &RunConfig::seed),
      {"threads",
       [](RunConfig& c, std::string_view v) {
         c.threads = parse_num<int>("threads", v);
         if (c.threads < 1) throw Error(ErrorKind::kArgument, "threads must be >= 1");
       },
       [](const RunConfig& c) { return std::to_string(c.threads); }},
      string_field("manifest", &RunConfig::manifest),
      string_field("data_dir", &RunConfig::data_dir),
      string_field("out_dir", &RunConfig::out_dir),
      string_field("checkpoint", &RunConfig::checkpoint),
      string_field("wav", &RunConfig::wav),
      string_field("output", &RunConfig::output),
      string_field("render_dir", &RunConfig::render_dir),
      string_field("landmarks", &RunConfig::landmarks),
      string_field("overlay", &RunConfig::overlay),
      string_field("mean_face", &RunConfig::mean_face),
      {"grid", [](RunConfig& c, std::string_view v) { c.train.grid = parse_grid(v); },
       [](const RunConfig& c) { return format_grid(c.train.grid); }},
      train_field("epochs", &TrainConfig::epochs),
      train_field("batch_size", &TrainConfig::batch_size),
      train_field("learning_rate", &TrainConfig::learning_rate),
      train_field("num_layers", &TrainConfig::num_layers),
      train_field("hidden_size", &TrainConfig::hidden_size),
      train_field("dropout_rate", &TrainConfig::dropout_rate),
      train_field("clip_norm", &TrainConfig::clip_norm),
      train_field("sequence_frames", &TrainConfig::sequence_frames),
      train_field("micro_batch", &TrainConfig::micro_batch),
      train_field("grid_threads", &TrainConfig::grid_threads),
      number_field("n_utterances", &RunConfig::n_utterances),
      number_field("n_speakers", &RunConfig::n_speakers),
      number_field("seconds", &RunConfig::seconds),
      number_field("canvas", &RunConfig::canvas),
  };
  return f;
}

}  // namespace

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  for (const auto& f : fields()) {
    if (f.key == key) {
      f.set(config, trim(value));
      if (key == "seed") config.train.seed = config.seed;
      return;
    }
  }
  throw Error(ErrorKind::kArgument, "unknown config key '" + std::string(key) + "'");
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& f : fields()) keys.push_back(f.key);
  return keys;
}

RunConfig parse_config_text(std::string_view text, RunConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    ++line_no;
    if (const std::size_t hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorKind::kArgument, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw e.prefixed("config line " + std::to_string(line_no));
    }
  }
  return base;
}

RunConfig load_config_file(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kArgument, "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config_text(ss.str(), std::move(base));
  } catch (const Error& e) {
    throw e.prefixed(path.string());
  }
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const auto& f : fields()) out += f.key + " = " + f.get(config) + '\n';
  return out;
}

}  // namespace lark
