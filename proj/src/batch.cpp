#include <algorithm>
#include <atomic>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "masseval/harness.hpp"
#include "masseval/morphology.hpp"

namespace fs = std::filesystem;

namespace masseval {

int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

ReportFormat parse_report_format(const std::string& s) {
  if (s == "md") return ReportFormat::md;
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw_validation("unknown format '" + s + "' (expected md, csv or json)");
}

namespace {

// Stems of `<stem><suffix>` regular files in `dir`, sorted.
std::vector<std::string> list_stems(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw_io("not a directory: " + dir.string());
  std::vector<std::string> stems;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (name.size() > suffix.size() && name.ends_with(suffix)) {
      stems.push_back(name.substr(0, name.size() - suffix.size()));
    }
  }
  std::sort(stems.begin(), stems.end());
  return stems;
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw_io("cannot create directory " + dir.string());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw_io("cannot write " + path.string());
  out << text;
  if (!out) throw_io("write failed: " + path.string());
}

template <typename T>
struct Outcome {
  std::optional<T> value;
  std::string error;
};

// Runs fn(i) for i in [0, n) on `jobs` threads. Results land at their own
// index, so the output never depends on scheduling.
template <typename T, typename Fn>
std::vector<Outcome<T>> parallel_map(std::size_t n, int jobs, Fn&& fn) {
  std::vector<Outcome<T>> results(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i].value.emplace(fn(i));
      } catch (const std::exception& e) {
        results[i].error = e.what();
      }
    }
  };
  const auto threads = static_cast<std::size_t>(std::max(1, jobs));
  if (threads == 1 || n <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  }
  return results;
}

template <typename T>
bool collect_failures(const std::vector<Outcome<T>>& results, const std::vector<std::string>& stems,
                      std::vector<std::string>& failures) {
  bool any = false;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!results[i].value) {
      failures.push_back(stems[i] + ": " + results[i].error);
      any = true;
    }
  }
  return any;
}

// Fails with a validation error unless both directories hold the same stems.
std::vector<std::string> matched_stems(const fs::path& a_dir, const std::string& a_suffix,
                                       const fs::path& b_dir, const std::string& b_suffix,
                                       const char* a_label, const char* b_label) {
  const auto a = list_stems(a_dir, a_suffix);
  const auto b = list_stems(b_dir, b_suffix);
  std::vector<std::string> only_a;
  std::vector<std::string> only_b;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(only_a));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(), std::back_inserter(only_b));
  if (!only_a.empty() || !only_b.empty()) {
    std::ostringstream msg;
    msg << "file stems do not match:";
    for (const auto& s : only_a) msg << "\n  " << s << ": " << a_label << " without " << b_label;
    for (const auto& s : only_b) msg << "\n  " << s << ": " << b_label << " without " << a_label;
    throw_validation(msg.str());
  }
  if (a.empty()) throw_validation("no input files in " + a_dir.string());
  return a;
}

Status status_from_failures(bool failed) { return failed ? Status::partial_failure : Status::ok; }

std::string fmt_fixed(double v, int decimals) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(decimals);
  os << v;
  return os.str();
}

nlohmann::json optional_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

struct EvalImage {
  EvalRecord record;
  MetricAccumulator acc;
};

}  // namespace

nlohmann::json eval_artifact(const EvalJob& job, std::vector<std::string>& failures) {
  job.metrics.validate();
  const auto stems = matched_stems(job.pred_dir, ".png", job.gt_dir, ".png", "prediction",
                                   "ground truth");
  const auto& table = job.metrics.classes;
  auto results = parallel_map<EvalImage>(stems.size(), resolve_jobs(job.options.jobs), [&](std::size_t i) {
    const auto gt = load_label_map(job.gt_dir / (stems[i] + ".png"), table);
    const auto pred = load_label_map(job.pred_dir / (stems[i] + ".png"), table);
    EvalImage out;
    out.record = out.acc.add(pred, gt, job.metrics, stems[i]);
    return out;
  });
  if (collect_failures(results, stems, failures)) return nullptr;

  // Fixed reduction order: sorted by stem.
  MetricAccumulator total;
  nlohmann::json per_image = nlohmann::json::array();
  for (const auto& r : results) {
    total.merge(r.value->acc);
    per_image.push_back(r.value->record.to_json(table));
  }
  const auto scores = total.finalize(job.metrics.aggregation);
  const auto counts = total.to_json(table);
  nlohmann::json per_class = nlohmann::json::object();
  for (const auto& [id, pc] : scores.per_class) {
    const auto& name = table.name(id);
    per_class[name] = {{"id", id},
                       {"iou", optional_json(pc.iou)},
                       {"biou", optional_json(pc.biou)},
                       {"bf1_precision", optional_json(pc.bf1_precision)},
                       {"bf1_recall", optional_json(pc.bf1_recall)},
                       {"bf1", optional_json(pc.bf1)},
                       {"counts", counts.at(name)}};
  }
  return {{"config", job.metrics.to_json()},
          {"images", stems.size()},
          {"per_image", per_image},
          {"per_class", per_class},
          {"means", {{"miou", scores.miou}, {"mbiou", scores.mbiou}, {"mbf1", scores.mbf1}}}};
}

namespace {

std::string render_eval_table(const nlohmann::json& artifact, ReportFormat format) {
  if (format == ReportFormat::json) return artifact.dump(2) + "\n";
  auto cell = [](const nlohmann::json& v, bool percent) {
    if (v.is_null()) return std::string("-");
    return percent ? fmt_fixed(v.get<double>() * 100.0, 2) : fmt_fixed(v.get<double>(), 4);
  };
  std::ostringstream os;
  const bool md = format == ReportFormat::md;
  if (md) {
    os << "| class | IoU | BIoU | BF1 |\n|---|---|---|---|\n";
  } else {
    os << "class,iou,biou,bf1\n";
  }
  std::vector<std::pair<int, std::string>> order;
  for (const auto& [name, v] : artifact.at("per_class").items()) {
    order.emplace_back(v.at("id").get<int>(), name);
  }
  std::sort(order.begin(), order.end());
  for (const auto& [id, name] : order) {
    const auto& v = artifact.at("per_class").at(name);
    const std::string cells[] = {name, cell(v.at("iou"), true), cell(v.at("biou"), true),
                                 cell(v.at("bf1"), false)};
    if (md) {
      os << "| " << cells[0] << " | " << cells[1] << " | " << cells[2] << " | " << cells[3] << " |\n";
    } else {
      os << cells[0] << ',' << cells[1] << ',' << cells[2] << ',' << cells[3] << '\n';
    }
  }
  const auto& m = artifact.at("means");
  const std::string mean_cells[] = {"mean", cell(m.at("miou"), true), cell(m.at("mbiou"), true),
                                    cell(m.at("mbf1"), false)};
  if (md) {
    os << "| **" << mean_cells[0] << "** | " << mean_cells[1] << " | " << mean_cells[2] << " | "
       << mean_cells[3] << " |\n";
  } else {
    os << mean_cells[0] << ',' << mean_cells[1] << ',' << mean_cells[2] << ',' << mean_cells[3]
       << '\n';
  }
  return os.str();
}

}  // namespace

CommandResult cmd_eval(const EvalJob& job) {
  CommandResult result;
  const auto artifact = eval_artifact(job, result.failures);
  if (artifact.is_null()) {
    result.status = Status::partial_failure;
    return result;
  }
  if (!job.options.out.empty()) write_text(job.options.out, artifact.dump(2) + "\n");
  result.text = render_eval_table(artifact, job.options.format);
  return result;
}

CommandResult cmd_stats(const StatsJob& job) {
  CommandResult result;
  const auto stems = list_stems(job.dir, ".png");
  if (stems.empty()) throw_validation("no label maps in " + job.dir.string());
  auto results = parallel_map<StatsAccumulator>(stems.size(), resolve_jobs(job.options.jobs),
                                                [&](std::size_t i) {
                                                  StatsAccumulator acc;
                                                  acc.add(load_label_map(job.dir / (stems[i] + ".png"), job.classes));
                                                  return acc;
                                                });
  const bool failed = collect_failures(results, stems, result.failures);
  StatsAccumulator total;
  bool any = false;
  for (const auto& r : results) {
    if (!r.value) continue;
    total.merge(*r.value);
    any = true;
  }
  if (!any) {
    result.status = Status::partial_failure;
    return result;
  }
  const auto stats = total.finalize();
  const auto j = stats.to_json(job.classes);
  if (!job.options.out.empty()) write_text(job.options.out, j.dump(2) + "\n");
  if (job.options.format == ReportFormat::json) {
    result.text = j.dump(2) + "\n";
  } else {
    std::ostringstream os;
    const bool md = job.options.format == ReportFormat::md;
    if (md) {
      os << "| #Image | #Size | #Classes | #IPQ |\n|---|---|---|---|\n";
      os << "| " << stats.image_count << " | " << fmt_fixed(stats.diag_mean, 0) << " ± "
         << fmt_fixed(stats.diag_std, 0) << " | " << job.classes.size() << " | "
         << fmt_fixed(stats.mipq_mean, 2) << " ± " << fmt_fixed(stats.mipq_std, 2) << " |\n\n";
      os << "| class | pixel fraction |\n|---|---|\n";
    } else {
      os << "images,diag_mean,diag_std,mipq_mean,mipq_std\n"
         << stats.image_count << ',' << fmt_fixed(stats.diag_mean, 4) << ','
         << fmt_fixed(stats.diag_std, 4) << ',' << fmt_fixed(stats.mipq_mean, 6) << ','
         << fmt_fixed(stats.mipq_std, 6) << "\n\nclass,pixel_fraction\n";
    }
    for (const auto& [id, f] : stats.pixel_fraction) {
      if (md) {
        os << "| " << job.classes.name(id) << " | " << fmt_fixed(f * 100.0, 2) << "% |\n";
      } else {
        os << job.classes.name(id) << ',' << fmt_fixed(f, 6) << '\n';
      }
    }
    result.text = os.str();
  }
  result.status = status_from_failures(failed);
  return result;
}

CommandResult cmd_edges(const EdgesJob& job) {
  if (job.options.out.empty()) throw_validation("edges requires an output directory (--out)");
  if (job.radius < 0) throw_validation("edge radius must be >= 0");
  CommandResult result;
  const auto stems = list_stems(job.dir, ".png");
  ensure_directory(job.options.out);
  auto results = parallel_map<std::size_t>(stems.size(), resolve_jobs(job.options.jobs), [&](std::size_t i) {
    const auto map = load_label_map(job.dir / (stems[i] + ".png"), job.classes);
    const EdgeMap edges = semantic_edges(map, job.radius);
    Raster<std::uint8_t> png(edges.width(), edges.height());
    for (std::size_t p = 0; p < edges.size(); ++p) png[p] = edges[p] ? 255 : 0;
    write_png_gray8(png, job.options.out / (stems[i] + ".edge.png"));
    return edges.popcount();
  });
  const bool failed = collect_failures(results, stems, result.failures);
  std::ostringstream os;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (results[i].value) os << stems[i] << ".edge.png " << *results[i].value << " edge pixels\n";
  }
  result.text = os.str();
  result.status = status_from_failures(failed);
  return result;
}

CommandResult cmd_weights(const WeightsJob& job) {
  if (job.options.out.empty()) throw_validation("weights requires an output directory (--out)");
  job.loss.require_covers(job.classes);
  CommandResult result;
  const auto stems = list_stems(job.dir, ".png");
  ensure_directory(job.options.out);
  auto results = parallel_map<std::size_t>(stems.size(), resolve_jobs(job.options.jobs), [&](std::size_t i) {
    const auto map = load_label_map(job.dir / (stems[i] + ".png"), job.classes);
    const auto factors = emit_training_weights(map, job.loss);
    for (const auto& f : factors) {
      write_pfm(f.factors, job.options.out / (stems[i] + ".w" + std::to_string(f.id) + ".pfm"));
    }
    return factors.size();
  });
  const bool failed = collect_failures(results, stems, result.failures);
  std::ostringstream os;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (results[i].value) os << stems[i] << ": " << *results[i].value << " factor maps\n";
  }
  result.text = os.str();
  result.status = status_from_failures(failed);
  return result;
}

CommandResult cmd_merge(const MergeJob& job) {
  if (job.options.out.empty()) throw_validation("merge requires an output directory (--out)");
  job.policy.validate(job.classes);
  CommandResult result;
  const auto stems = matched_stems(job.gt_dir, ".png", job.pseudo_dir, ".png", "label map", "pseudo mask");
  ensure_directory(job.options.out);
  auto results = parallel_map<MergeReport>(stems.size(), resolve_jobs(job.options.jobs), [&](std::size_t i) {
    const auto gt = load_label_map(job.gt_dir / (stems[i] + ".png"), job.classes);
    const auto raw = read_png_index8(job.pseudo_dir / (stems[i] + ".png"));
    BinaryMask pseudo(raw.width(), raw.height());
    for (std::size_t p = 0; p < raw.size(); ++p) pseudo[p] = raw[p] != 0;
    auto merged = merge_pseudo(gt, pseudo, job.policy);
    save_label_map(merged.labels, job.options.out / (stems[i] + ".png"));
    return std::move(merged.report);
  });
  const bool failed = collect_failures(results, stems, result.failures);
  const ClassTable out_table = job.classes.contains(job.policy.new_class_id)
                                   ? job.classes
                                   : job.classes.with_class(job.policy.new_class_id, job.policy.new_class_name);
  out_table.save(job.options.out / "classes.json");
  std::ostringstream manifest;
  std::uint64_t assigned = 0;
  std::uint64_t conflicts = 0;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (!results[i].value) continue;
    manifest << results[i].value->to_json(stems[i], out_table).dump() << '\n';
    assigned += results[i].value->assigned;
    for (const auto& [id, n] : results[i].value->conflicts) conflicts += n;
  }
  write_text(job.options.out / "manifest.jsonl", manifest.str());
  std::ostringstream os;
  os << "merged " << (stems.size() - result.failures.size()) << " images: " << assigned
     << " pixels assigned to '" << job.policy.new_class_name << "', " << conflicts
     << " conflicting pixels\n";
  result.text = os.str();
  result.status = status_from_failures(failed);
  return result;
}

CommandResult cmd_loss(const LossJob& job) {
  job.loss.require_covers(job.classes);
  CommandResult result;
  const auto stems = list_stems(job.gt_dir, ".png");
  if (stems.empty()) throw_validation("no label maps in " + job.gt_dir.string());
  struct ImageLoss {
    LossReport report;
    bool edge_evaluated = false;
  };
  auto results = parallel_map<ImageLoss>(stems.size(), resolve_jobs(job.options.jobs), [&](std::size_t i) {
    const auto gt = load_label_map(job.gt_dir / (stems[i] + ".png"), job.classes);
    const auto stack = load_prob_stack(job.pred_dir, stems[i], job.classes);
    const auto edge_path = job.pred_dir / (stems[i] + ".edge.pfm");
    std::optional<ProbMap> edge;
    if (fs::exists(edge_path)) {
      auto raw = read_pfm(edge_path);
      const int w = raw.width();
      const int h = raw.height();
      edge.emplace(w, h, std::vector<double>(raw.values().begin(), raw.values().end()));
    }
    return ImageLoss{total_loss(stack, edge ? &*edge : nullptr, gt, job.loss), edge.has_value()};
  });
  const bool failed = collect_failures(results, stems, result.failures);
  nlohmann::json per_image = nlohmann::json::array();
  double sums[4] = {0.0, 0.0, 0.0, 0.0};
  std::size_t n = 0;
  for (std::size_t i = 0; i < stems.size(); ++i) {
    if (!results[i].value) continue;
    const auto& r = results[i].value->report;
    auto j = r.to_json(job.classes);
    j["image"] = stems[i];
    j["edge_evaluated"] = results[i].value->edge_evaluated;
    per_image.push_back(j);
    sums[0] += r.bce_weighted;
    sums[1] += r.dice;
    sums[2] += r.edge;
    sums[3] += r.total_partial;
    ++n;
  }
  const double denom = n == 0 ? 1.0 : static_cast<double>(n);
  nlohmann::json artifact = {{"config", job.loss.to_json()},
                             {"classes", job.classes.to_json()},
                             {"per_image", per_image},
                             {"mean",
                              {{"bce_weighted", sums[0] / denom},
                               {"dice", sums[1] / denom},
                               {"edge", sums[2] / denom},
                               {"total_partial", sums[3] / denom}}}};
  if (!job.options.out.empty()) write_text(job.options.out, artifact.dump(2) + "\n");
  if (job.options.format == ReportFormat::json) {
    result.text = artifact.dump(2) + "\n";
  } else {
    std::ostringstream os;
    const bool md = job.options.format == ReportFormat::md;
    os << (md ? "| image | BCE^w | Dice | edge | total (no L_cls) |\n|---|---|---|---|---|\n"
              : "image,bce_weighted,dice,edge,total_partial\n");
    auto row = [&](const std::string& name, double a, double b, double c, double d) {
      if (md) {
        os << "| " << name << " | " << fmt_fixed(a, 6) << " | " << fmt_fixed(b, 6) << " | "
           << fmt_fixed(c, 6) << " | " << fmt_fixed(d, 6) << " |\n";
      } else {
        os << name << ',' << fmt_fixed(a, 9) << ',' << fmt_fixed(b, 9) << ',' << fmt_fixed(c, 9)
           << ',' << fmt_fixed(d, 9) << '\n';
      }
    };
    for (std::size_t i = 0; i < stems.size(); ++i) {
      if (!results[i].value) continue;
      const auto& r = results[i].value->report;
      row(stems[i], r.bce_weighted, r.dice, r.edge, r.total_partial);
    }
    row("mean", sums[0] / denom, sums[1] / denom, sums[2] / denom, sums[3] / denom);
    result.text = os.str();
  }
  result.status = status_from_failures(failed);
  return result;
}

CommandResult cmd_bokeh(const BokehJob& job) {
  if (job.out.empty()) throw_validation("bokeh requires an output path (--out)");
  const RgbImage image = read_png_rgb(job.image);
  const auto raw = read_png_index8(job.mask);
  BinaryMask mask(raw.width(), raw.height());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    mask[i] = job.mask_class ? raw[i] == *job.mask_class : raw[i] != 0;
  }
  write_png_rgb(composite_bokeh(image, mask, job.sigma, job.feather), job.out);
  CommandResult result;
  result.text = "wrote " + job.out.string() + "\n";
  return result;
}

CommandResult cmd_report(const ReportJob& job) {
  if (job.artifacts.empty()) throw_validation("report needs at least one evaluation artifact");
  std::vector<nlohmann::json> artifacts;
  std::vector<std::string> names;
  for (const auto& path : job.artifacts) {
    std::ifstream in(path);
    if (!in) throw_io("cannot open " + path.string());
    try {
      artifacts.push_back(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw_validation("cannot parse " + path.string() + ": " + e.what());
    }
    names.push_back(path.stem().string());
  }
  CommandResult result;
  result.text = render_report(report_from_artifacts(artifacts, names), job.options.format);
  if (!job.options.out.empty()) write_text(job.options.out, result.text);
  return result;
}

}  // namespace masseval
