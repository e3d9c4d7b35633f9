#include <fmt/format.h>

#include "seadet/dataset.hpp"

namespace seadet {

std::size_t SplitStats::image_total(Split s) const {
  std::size_t total = 0;
  for (auto n : images[index_of(s)]) total += n;
  return total;
}

std::size_t SplitStats::instance_count(Split s, int class_id) const {
  const auto& row = instances[index_of(s)];
  return class_id >= 0 && static_cast<std::size_t>(class_id) < row.size()
             ? row[static_cast<std::size_t>(class_id)]
             : 0;
}

std::size_t SplitStats::instance_total(Split s) const {
  std::size_t total = 0;
  for (auto n : instances[index_of(s)]) total += n;
  return total;
}

std::vector<std::size_t> SplitStats::class_totals() const {
  std::vector<std::size_t> totals(num_classes, 0);
  for (const auto& row : instances) {
    for (std::size_t c = 0; c < row.size(); ++c) totals[c] += row[c];
  }
  return totals;
}

Json SplitStats::to_json(const CategoryTable& categories) const {
  Json out = Json::object();
  for (Split s : kAllSplits) {
    Json images_by_domain = Json::object();
    for (Domain d : kAllDomains) images_by_domain[std::string(to_string(d))] = image_count(s, d);
    images_by_domain["total"] = image_total(s);
    Json by_class = Json::object();
    for (const auto& c : categories.entries()) by_class[c.name] = instance_count(s, c.id);
    out[std::string(to_string(s))] = {{"images", images_by_domain}, {"instances", by_class}};
  }
  return out;
}

SplitStats split_stats(const Dataset& d) {
  SplitStats stats;
  stats.num_classes = d.categories.size();
  for (auto& row : stats.instances) row.assign(stats.num_classes, 0);
  for (const auto& image : d.images) {
    ++stats.images[index_of(image.split)][index_of(image.domain)];
    for (const auto& ann : image.annotations) {
      if (d.categories.contains(ann.category_id)) {
        ++stats.instances[index_of(image.split)][static_cast<std::size_t>(ann.category_id)];
      }
    }
  }
  return stats;
}

std::string with_thousands(std::size_t value) {
  std::string digits = std::to_string(value);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

namespace {

std::string_view split_label(Split s) {
  switch (s) {
    case Split::kTrain: return "Train";
    case Split::kVal: return "Validation";
    case Split::kTest: return "Test";
  }
  return "";
}

}  // namespace

std::string render_split_table(const SplitStats& stats) {
  std::string out = "| Split | Real | Synthetic | Augmented | Total |\n";
  out += "|---|---:|---:|---:|---:|\n";
  for (Split s : kAllSplits) {
    out += fmt::format("| {} | {} | {} | {} | {} |\n", split_label(s),
                       with_thousands(stats.image_count(s, Domain::kReal)),
                       with_thousands(stats.image_count(s, Domain::kSynthetic)),
                       with_thousands(stats.image_count(s, Domain::kAugmented)),
                       with_thousands(stats.image_total(s)));
  }
  return out;
}

std::string render_class_table(const SplitStats& stats, const CategoryTable& categories) {
  std::string out = "| Class | Train | Validation | Test |\n|---|---:|---:|---:|\n";
  for (const auto& c : categories.entries()) {
    out += fmt::format("| {} | {} | {} | {} |\n", c.name,
                       with_thousands(stats.instance_count(Split::kTrain, c.id)),
                       with_thousands(stats.instance_count(Split::kVal, c.id)),
                       with_thousands(stats.instance_count(Split::kTest, c.id)));
  }
  return out;
}

}  // namespace seadet
