#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "masseval/raster.hpp"

namespace masseval {

using ClassId = std::uint8_t;

struct ClassEntry {
  ClassId id = 0;
  std::string name;

  bool operator==(const ClassEntry&) const = default;
};

/// Ordered set of (id, name) classes plus the reserved ignore id.
///
/// The canonical table freezes 0=others, 1=human, 2=building, 3=vegetation,
/// 4=ground, 5=sky, 6=water. Extension classes take the next free id >= 7.
class ClassTable {
 public:
  static constexpr ClassId kDefaultIgnore = 255;
  static constexpr ClassId kFirstExtensionId = 7;

  ClassTable(std::vector<ClassEntry> entries, ClassId ignore_id = kDefaultIgnore);

  static ClassTable canonical();
  static ClassTable from_json(const nlohmann::json& j);
  static ClassTable load(const std::filesystem::path& path);

  nlohmann::json to_json() const;
  void save(const std::filesystem::path& path) const;

  const std::vector<ClassEntry>& entries() const noexcept { return entries_; }
  std::vector<ClassId> ids() const;
  std::size_t size() const noexcept { return entries_.size(); }
  ClassId ignore_id() const noexcept { return ignore_; }

  bool contains(ClassId id) const noexcept { return member_[id]; }
  /// Name of `id`; "ignore" for the ignore id. Throws for unknown ids.
  const std::string& name(ClassId id) const;
  std::optional<ClassId> find(const std::string& name) const;

  /// Smallest id >= 7 that is neither used nor the ignore id.
  ClassId next_free_id() const;
  ClassTable with_class(ClassId id, std::string name) const;

  bool operator==(const ClassTable& other) const {
    return entries_ == other.entries_ && ignore_ == other.ignore_;
  }

 private:
  std::vector<ClassEntry> entries_;
  ClassId ignore_;
  std::array<bool, 256> member_{};
};

/// Raster of class ids validated against a class table.
class LabelMap {
 public:
  LabelMap(int width, int height, std::vector<ClassId> data, ClassTable table);
  /// Uniform map filled with `fill` (a table id or the ignore id).
  LabelMap(int width, int height, ClassId fill, ClassTable table);

  int width() const noexcept { return raster_.width(); }
  int height() const noexcept { return raster_.height(); }
  std::size_t size() const noexcept { return raster_.size(); }
  ClassId operator()(int x, int y) const { return raster_(x, y); }
  ClassId operator[](std::size_t i) const { return raster_[i]; }
  std::span<const ClassId> values() const noexcept { return raster_.values(); }
  const Raster<ClassId>& raster() const noexcept { return raster_; }
  const ClassTable& table() const noexcept { return table_; }

  bool is_ignore(std::size_t i) const { return raster_[i] == table_.ignore_id(); }
  std::size_t ignore_count() const;
  double diagonal() const;

  bool operator==(const LabelMap&) const = default;

 private:
  Raster<ClassId> raster_;
  ClassTable table_;
};

/// One probability map per table class, in table order.
class ProbStack {
 public:
  ProbStack(std::vector<ProbMap> maps, ClassTable table);

  const ClassTable& table() const noexcept { return table_; }
  const std::vector<ProbMap>& maps() const noexcept { return maps_; }
  const ProbMap& for_class(ClassId id) const;
  int width() const noexcept { return maps_.front().width(); }
  int height() const noexcept { return maps_.front().height(); }

 private:
  std::vector<ProbMap> maps_;
  ClassTable table_;
};

/// Pixels equal to `id`. Ignore pixels are never set.
BinaryMask class_mask(const LabelMap& map, ClassId id);
BinaryMask ignore_mask(const LabelMap& map);

LabelMap load_label_map(const std::filesystem::path& path, const ClassTable& table);
void save_label_map(const LabelMap& map, const std::filesystem::path& path);

/// Reads `<dir>/<stem>.<class_id>.pfm` for every class of the table.
ProbStack load_prob_stack(const std::filesystem::path& dir, const std::string& stem,
                          const ClassTable& table);
void save_prob_stack(const ProbStack& stack, const std::filesystem::path& dir,
                     const std::string& stem);

}  // namespace masseval
