#include "masseval/mask_core.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "masseval/image_io.hpp"

namespace masseval {

ClassTable::ClassTable(std::vector<ClassEntry> entries, ClassId ignore_id)
    : entries_(std::move(entries)), ignore_(ignore_id) {
  if (entries_.empty()) throw_validation("class table has no classes");
  for (const auto& e : entries_) {
    if (e.id == ignore_) {
      throw_validation("class id " + std::to_string(e.id) + " collides with the ignore id");
    }
    if (member_[e.id]) throw_validation("duplicate class id " + std::to_string(e.id));
    member_[e.id] = true;
    if (e.name.empty()) throw_validation("class " + std::to_string(e.id) + " has an empty name");
  }
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    for (std::size_t j = i + 1; j < entries_.size(); ++j) {
      if (entries_[i].name == entries_[j].name) {
        throw_validation("duplicate class name '" + entries_[i].name + "'");
      }
    }
  }
}

ClassTable ClassTable::canonical() {
  return ClassTable({{0, "others"},
                     {1, "human"},
                     {2, "building"},
                     {3, "vegetation"},
                     {4, "ground"},
                     {5, "sky"},
                     {6, "water"}});
}

ClassTable ClassTable::from_json(const nlohmann::json& j) {
  try {
    std::vector<ClassEntry> entries;
    for (const auto& c : j.at("classes")) {
      const int id = c.at("id").get<int>();
      if (id < 0 || id > 255) throw_validation("class id " + std::to_string(id) + " out of range");
      entries.push_back({static_cast<ClassId>(id), c.at("name").get<std::string>()});
    }
    int ignore = kDefaultIgnore;
    if (j.contains("ignore")) ignore = j.at("ignore").get<int>();
    if (ignore < 0 || ignore > 255) throw_validation("ignore id out of range");
    return ClassTable(std::move(entries), static_cast<ClassId>(ignore));
  } catch (const nlohmann::json::exception& e) {
    throw_validation(std::string("malformed class table: ") + e.what());
  }
}

ClassTable ClassTable::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open class table " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw_validation("cannot parse class table " + path.string() + ": " + e.what());
  }
  return from_json(j);
}

nlohmann::json ClassTable::to_json() const {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& e : entries_) classes.push_back({{"id", e.id}, {"name", e.name}});
  return {{"classes", classes}, {"ignore", ignore_}};
}

void ClassTable::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw_io("cannot write class table " + path.string());
  out << to_json().dump(2) << '\n';
}

std::vector<ClassId> ClassTable::ids() const {
  std::vector<ClassId> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.id);
  return out;
}

const std::string& ClassTable::name(ClassId id) const {
  static const std::string kIgnore = "ignore";
  if (id == ignore_) return kIgnore;
  for (const auto& e : entries_) {
    if (e.id == id) return e.name;
  }
  throw_validation("unknown class id " + std::to_string(id));
}

std::optional<ClassId> ClassTable::find(const std::string& name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.id;
  }
  return std::nullopt;
}

ClassId ClassTable::next_free_id() const {
  for (int id = kFirstExtensionId; id < 256; ++id) {
    if (!member_[id] && id != ignore_) return static_cast<ClassId>(id);
  }
  throw_validation("class table is full");
}

ClassTable ClassTable::with_class(ClassId id, std::string name) const {
  auto entries = entries_;
  entries.push_back({id, std::move(name)});
  return ClassTable(std::move(entries), ignore_);
}

LabelMap::LabelMap(int width, int height, std::vector<ClassId> data, ClassTable table)
    : raster_(width, height, std::move(data)), table_(std::move(table)) {
  for (auto v : raster_.values()) {
    if (!table_.contains(v) && v != table_.ignore_id()) {
      throw_validation("unknown class id " + std::to_string(v));
    }
  }
}

LabelMap::LabelMap(int width, int height, ClassId fill, ClassTable table)
    : raster_(width, height, fill), table_(std::move(table)) {
  if (!table_.contains(fill) && fill != table_.ignore_id()) {
    throw_validation("unknown class id " + std::to_string(fill));
  }
}

std::size_t LabelMap::ignore_count() const {
  std::size_t n = 0;
  for (auto v : raster_.values()) n += v == table_.ignore_id();
  return n;
}

double LabelMap::diagonal() const {
  return std::hypot(static_cast<double>(width()), static_cast<double>(height()));
}

ProbStack::ProbStack(std::vector<ProbMap> maps, ClassTable table)
    : maps_(std::move(maps)), table_(std::move(table)) {
  if (maps_.size() != table_.size()) {
    throw_validation("probability stack has " + std::to_string(maps_.size()) + " maps but table has " +
                     std::to_string(table_.size()) + " classes");
  }
  for (const auto& m : maps_) require_same_shape(m, maps_.front(), "probability stack");
}

const ProbMap& ProbStack::for_class(ClassId id) const {
  const auto& entries = table_.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].id == id) return maps_[i];
  }
  throw_validation("probability stack has no map for class id " + std::to_string(id));
}

BinaryMask class_mask(const LabelMap& map, ClassId id) {
  if (!map.table().contains(id)) throw_validation("unknown class id " + std::to_string(id));
  BinaryMask out(map.width(), map.height());
  auto src = map.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == id;
  return out;
}

BinaryMask ignore_mask(const LabelMap& map) {
  BinaryMask out(map.width(), map.height());
  const ClassId ignore = map.table().ignore_id();
  auto src = map.values();
  auto dst = out.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] == ignore;
  return out;
}

LabelMap load_label_map(const std::filesystem::path& path, const ClassTable& table) {
  auto raw = read_png_index8(path);
  const int w = raw.width();
  const int h = raw.height();
  std::vector<ClassId> data(raw.values().begin(), raw.values().end());
  try {
    return LabelMap(w, h, std::move(data), table);
  } catch (const Error& e) {
    throw_validation(path.string() + ": " + e.what());
  }
}

void save_label_map(const LabelMap& map, const std::filesystem::path& path) {
  write_png_gray8(map.raster(), path);
}

ProbStack load_prob_stack(const std::filesystem::path& dir, const std::string& stem,
                          const ClassTable& table) {
  std::vector<ProbMap> maps;
  maps.reserve(table.size());
  for (const auto& e : table.entries()) {
    const auto file = dir / (stem + "." + std::to_string(e.id) + ".pfm");
    if (!std::filesystem::exists(file)) {
      throw_io("missing probability map for class id " + std::to_string(e.id) + ": " +
               file.string());
    }
    auto raw = read_pfm(file);
    const int w = raw.width();
    const int h = raw.height();
    std::vector<double> values(raw.values().begin(), raw.values().end());
    try {
      maps.emplace_back(w, h, std::move(values));
    } catch (const Error& err) {
      throw_validation(file.string() + ": " + err.what());
    }
    if (!maps.back().same_shape(maps.front())) {
      throw_validation(file.string() + ": dimension mismatch within probability stack");
    }
  }
  return ProbStack(std::move(maps), table);
}

void save_prob_stack(const ProbStack& stack, const std::filesystem::path& dir,
                     const std::string& stem) {
  const auto& entries = stack.table().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    write_pfm(stack.maps()[i], dir / (stem + "." + std::to_string(entries[i].id) + ".pfm"));
  }
}

}  // namespace masseval
