#ifndef RADARPREP_INGEST_HPP
#define RADARPREP_INGEST_HPP

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "radarprep/core.hpp"

namespace radarprep {

enum class FileFormat { kJsonl, kCsv };

struct FrameSetMeta {
  std::size_t frame_size = kDefaultFrameSize;
  std::size_t num_keypoints = 0;
  std::string source;  // provenance tag, not persisted
};

struct FrameSet {
  std::vector<Frame> frames;
  FrameSetMeta meta;

  friend bool operator==(const FrameSet& a, const FrameSet& b) {
    return a.frames == b.frames && a.meta.frame_size == b.meta.frame_size &&
           a.meta.num_keypoints == b.meta.num_keypoints;
  }
};

/// Per-point origin in synthesized scenes.
enum class Origin : int { kHuman = 0, kClutter = 1, kPadding = 2 };

struct GroundTruthFrame {
  std::uint64_t frame_id = 0;
  Point3 body_centroid;
  std::vector<Origin> origin_labels;

  friend bool operator==(const GroundTruthFrame&, const GroundTruthFrame&) = default;
};

using GroundTruth = std::vector<GroundTruthFrame>;

/// Picks the format from the file extension (".csv" → CSV, anything else JSONL).
inline FileFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".csv" ? FileFormat::kCsv : FileFormat::kJsonl;
}

/// Shortest decimal form that parses back to the same double.
inline std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) throw DataError("cannot format number");
  return std::string(buf, end);
}

namespace detail {

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing: " + std::strerror(errno));
  return out;
}

inline void finish_write(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw DataError("write to " + path.string() + " failed: " + std::strerror(errno));
}

inline void append_point_list(std::string& s, const std::vector<Point3>& pts) {
  s += '[';
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i) s += ',';
    s += '[';
    s += format_number(pts[i].x);
    s += ',';
    s += format_number(pts[i].y);
    s += ',';
    s += format_number(pts[i].z);
    s += ']';
  }
  s += ']';
}

inline std::vector<Point3> parse_point_list(const nlohmann::json& arr, std::size_t line,
                                            std::string_view field) {
  auto fail = [&](const std::string& why) {
    return DataError("line " + std::to_string(line) + ": field '" + std::string(field) + "' " + why);
  };
  if (!arr.is_array()) throw fail("must be an array of [x,y,z]");
  std::vector<Point3> pts;
  pts.reserve(arr.size());
  for (const auto& p : arr) {
    if (!p.is_array() || p.size() != 3 || !p[0].is_number() || !p[1].is_number() || !p[2].is_number())
      throw fail("must contain [x,y,z] numeric triples");
    Point3 q{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
    if (!is_finite(q)) throw fail("contains a non-finite coordinate");
    pts.push_back(q);
  }
  return pts;
}

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line, std::string_view field) {
  while (!text.empty() && (text.back() == '\r' || text.back() == ' ')) text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw DataError("line " + std::to_string(line) + ": field '" + std::string(field) +
                    "' is not a valid number: '" + std::string(text) + "'");
  return value;
}

struct CsvPointRow {
  std::uint64_t frame_id;
  std::size_t index;
  Point3 p;
};

/// Reads `frame_id,point_index,x,y,z` rows, grouped by frame in file order.
inline std::vector<std::pair<std::uint64_t, std::vector<Point3>>> read_point_csv(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string() + ": " + std::strerror(errno));
  std::vector<std::pair<std::uint64_t, std::vector<Point3>>> groups;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    if (lineno == 1 && line.rfind("frame_id", 0) == 0) continue;
    const auto f = split_csv(line);
    if (f.size() != 5)
      throw DataError("line " + std::to_string(lineno) + ": expected 5 fields, got " +
                      std::to_string(f.size()));
    CsvPointRow row{parse_field<std::uint64_t>(f[0], lineno, "frame_id"),
                    parse_field<std::size_t>(f[1], lineno, "point_index"),
                    {parse_field<double>(f[2], lineno, "x"), parse_field<double>(f[3], lineno, "y"),
                     parse_field<double>(f[4], lineno, "z")}};
    if (!is_finite(row.p))
      throw DataError("line " + std::to_string(lineno) + ": field 'x/y/z' is not finite");
    if (groups.empty() || groups.back().first != row.frame_id) groups.push_back({row.frame_id, {}});
    auto& pts = groups.back().second;
    if (row.index != pts.size())
      throw DataError("line " + std::to_string(lineno) + ": field 'point_index' expected " +
                      std::to_string(pts.size()) + ", got " + std::to_string(row.index));
    pts.push_back(row.p);
  }
  return groups;
}

inline void write_point_csv(std::ostream& out, std::uint64_t frame_id, const std::vector<Point3>& pts) {
  std::string s;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s.clear();
    s += std::to_string(frame_id);
    s += ',';
    s += std::to_string(i);
    s += ',';
    s += format_number(pts[i].x);
    s += ',';
    s += format_number(pts[i].y);
    s += ',';
    s += format_number(pts[i].z);
    s += '\n';
    out << s;
  }
}

inline std::filesystem::path sibling(const std::filesystem::path& path, std::string_view tag) {
  auto stem = path.stem().string();
  return path.parent_path() / (stem + "." + std::string(tag) + ".csv");
}

inline void check_frame_sizes(FrameSet& set, std::optional<std::size_t> expected) {
  if (set.frames.empty()) {
    if (expected) set.meta.frame_size = *expected;
    return;
  }
  const std::size_t size = expected.value_or(set.frames.front().points.size());
  for (const auto& f : set.frames)
    if (f.points.size() != size)
      throw DataError("frame " + std::to_string(f.frame_id) + ": expected " + std::to_string(size) +
                      " points, got " + std::to_string(f.points.size()));
  set.meta.frame_size = size;
  for (const auto& f : set.frames)
    if (f.keypoints) {
      set.meta.num_keypoints = f.keypoints->size();
      break;
    }
}

}  // namespace detail

/// Keypoints live in `<name>.keypoints.csv` and action labels in
/// `<name>.labels.csv` next to a CSV frame file.
inline std::filesystem::path keypoints_path(const std::filesystem::path& csv_path) {
  return detail::sibling(csv_path, "keypoints");
}
inline std::filesystem::path labels_path(const std::filesystem::path& csv_path) {
  return detail::sibling(csv_path, "labels");
}

/// Loads a frame file. When `expected_frame_size` is empty it is taken from
/// the first frame; every frame must match it.
inline FrameSet load_frames(const std::filesystem::path& path, FileFormat format,
                            std::optional<std::size_t> expected_frame_size = std::nullopt) {
  FrameSet set;
  set.meta.source = format == FileFormat::kCsv ? "csv" : "jsonl";
  if (format == FileFormat::kJsonl) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string() + ": " + std::strerror(errno));
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw DataError("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
      }
      if (!j.is_object()) throw DataError("line " + std::to_string(lineno) + ": record is not an object");
      Frame f;
      if (!j.contains("frame_id") || !j["frame_id"].is_number_unsigned())
        throw DataError("line " + std::to_string(lineno) + ": field 'frame_id' missing or not a non-negative integer");
      f.frame_id = j["frame_id"].get<std::uint64_t>();
      if (!j.contains("points")) throw DataError("line " + std::to_string(lineno) + ": field 'points' missing");
      f.points = detail::parse_point_list(j["points"], lineno, "points");
      if (j.contains("keypoints") && !j["keypoints"].is_null()) {
        f.keypoints = detail::parse_point_list(j["keypoints"], lineno, "keypoints");
        if (f.keypoints->empty())
          throw DataError("line " + std::to_string(lineno) + ": field 'keypoints' is empty");
      }
      if (j.contains("action_label") && !j["action_label"].is_null()) {
        const auto& a = j["action_label"];
        if (!a.is_number_integer() || a.get<int>() < 0 || a.get<int>() > 48)
          throw DataError("line " + std::to_string(lineno) + ": field 'action_label' must be an integer in [0, 48]");
        f.action_label = a.get<int>();
      }
      set.frames.push_back(std::move(f));
    }
  } else {
    for (auto& [id, pts] : detail::read_point_csv(path)) {
      Frame f;
      f.frame_id = id;
      f.points = std::move(pts);
      set.frames.push_back(std::move(f));
    }
    std::map<std::uint64_t, Frame*> by_id;
    for (auto& f : set.frames) by_id[f.frame_id] = &f;
    if (const auto kp = keypoints_path(path); std::filesystem::exists(kp)) {
      for (auto& [id, pts] : detail::read_point_csv(kp)) {
        auto it = by_id.find(id);
        if (it == by_id.end())
          throw DataError(kp.string() + ": keypoints for unknown frame " + std::to_string(id));
        it->second->keypoints = std::move(pts);
      }
    }
    if (const auto lp = labels_path(path); std::filesystem::exists(lp)) {
      std::ifstream in(lp);
      std::string line;
      std::size_t lineno = 0;
      while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || (lineno == 1 && line.rfind("frame_id", 0) == 0)) continue;
        const auto fields = detail::split_csv(line);
        if (fields.size() != 2)
          throw DataError(lp.string() + ": line " + std::to_string(lineno) + ": expected 2 fields");
        const auto id = detail::parse_field<std::uint64_t>(fields[0], lineno, "frame_id");
        const int label = detail::parse_field<int>(fields[1], lineno, "action_label");
        auto it = by_id.find(id);
        if (it == by_id.end())
          throw DataError(lp.string() + ": label for unknown frame " + std::to_string(id));
        it->second->action_label = label;
      }
    }
  }
  detail::check_frame_sizes(set, expected_frame_size);
  return set;
}

inline FrameSet load_frames(const std::filesystem::path& path,
                            std::optional<std::size_t> expected_frame_size = std::nullopt) {
  return load_frames(path, format_for_path(path), expected_frame_size);
}

inline void write_frames(const FrameSet& set, const std::filesystem::path& path, FileFormat format) {
  auto out = detail::open_for_write(path);
  if (format == FileFormat::kJsonl) {
    std::string s;
    for (const auto& f : set.frames) {
      s = "{\"frame_id\":" + std::to_string(f.frame_id) + ",\"points\":";
      detail::append_point_list(s, f.points);
      if (f.keypoints) {
        s += ",\"keypoints\":";
        detail::append_point_list(s, *f.keypoints);
      }
      if (f.action_label) s += ",\"action_label\":" + std::to_string(*f.action_label);
      s += "}\n";
      out << s;
    }
    detail::finish_write(out, path);
    return;
  }

  out << "frame_id,point_index,x,y,z\n";
  for (const auto& f : set.frames) detail::write_point_csv(out, f.frame_id, f.points);
  detail::finish_write(out, path);

  const bool any_kp = std::any_of(set.frames.begin(), set.frames.end(),
                                  [](const Frame& f) { return f.keypoints.has_value(); });
  const auto kp = keypoints_path(path);
  if (any_kp) {
    auto kout = detail::open_for_write(kp);
    kout << "frame_id,point_index,x,y,z\n";
    for (const auto& f : set.frames)
      if (f.keypoints) detail::write_point_csv(kout, f.frame_id, *f.keypoints);
    detail::finish_write(kout, kp);
  } else {
    std::filesystem::remove(kp);
  }
  const bool any_label = std::any_of(set.frames.begin(), set.frames.end(),
                                     [](const Frame& f) { return f.action_label.has_value(); });
  const auto lp = labels_path(path);
  if (any_label) {
    auto lout = detail::open_for_write(lp);
    lout << "frame_id,action_label\n";
    for (const auto& f : set.frames)
      if (f.action_label) lout << f.frame_id << ',' << *f.action_label << '\n';
    detail::finish_write(lout, lp);
  } else {
    std::filesystem::remove(lp);
  }
}

inline void write_frames(const FrameSet& set, const std::filesystem::path& path) {
  write_frames(set, path, format_for_path(path));
}

inline void write_ground_truth(const GroundTruth& truth, const std::filesystem::path& path) {
  auto out = detail::open_for_write(path);
  std::string s;
  for (const auto& g : truth) {
    s = "{\"frame_id\":" + std::to_string(g.frame_id) + ",\"body_centroid\":[" +
        format_number(g.body_centroid.x) + "," + format_number(g.body_centroid.y) + "," +
        format_number(g.body_centroid.z) + "],\"origin_labels\":[";
    for (std::size_t i = 0; i < g.origin_labels.size(); ++i) {
      if (i) s += ',';
      s += static_cast<char>('0' + static_cast<int>(g.origin_labels[i]));
    }
    s += "]}\n";
    out << s;
  }
  detail::finish_write(out, path);
}

inline GroundTruth load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string() + ": " + std::strerror(errno));
  GroundTruth truth;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      GroundTruthFrame g;
      g.frame_id = j.at("frame_id").get<std::uint64_t>();
      const auto& c = j.at("body_centroid");
      g.body_centroid = {c.at(0).get<double>(), c.at(1).get<double>(), c.at(2).get<double>()};
      for (const auto& l : j.at("origin_labels")) {
        const int v = l.get<int>();
        if (v < 0 || v > 2) throw DataError("origin label out of range");
        g.origin_labels.push_back(static_cast<Origin>(v));
      }
      truth.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw DataError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return truth;
}

}  // namespace radarprep

#endif  // RADARPREP_INGEST_HPP
