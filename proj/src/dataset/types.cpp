#include <algorithm>
#include <set>
#include <unordered_set>

#include "seadet/dataset.hpp"
#include "seadet/error.hpp"

namespace seadet {

std::string_view to_string(Domain d) {
  switch (d) {
    case Domain::kReal: return "real";
    case Domain::kSynthetic: return "synthetic";
    case Domain::kAugmented: return "augmented";
  }
  return "real";
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::string_view to_string(AnnotationSource s) {
  return s == AnnotationSource::kPasted ? "pasted" : "original";
}

Domain parse_domain(std::string_view text) {
  for (Domain d : kAllDomains) {
    if (to_string(d) == text) return d;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown domain '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  for (Split s : kAllSplits) {
    if (to_string(s) == text) return s;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown split '" + std::string(text) + "'");
}

AnnotationSource parse_source(std::string_view text) {
  if (text == "original") return AnnotationSource::kOriginal;
  if (text == "pasted") return AnnotationSource::kPasted;
  throw Error(ErrorCode::kInvalidArgument, "unknown source '" + std::string(text) + "'");
}

CategoryTable::CategoryTable(std::vector<Category> categories)
    : categories_(std::move(categories)) {
  std::set<std::string> names;
  for (std::size_t i = 0; i < categories_.size(); ++i) {
    if (categories_[i].id != static_cast<int>(i)) {
      throw Error(ErrorCode::kInvalidArgument,
                  "category ids must be contiguous from 0; got " +
                      std::to_string(categories_[i].id) + " at position " +
                      std::to_string(i));
    }
    if (categories_[i].name.empty() || !names.insert(categories_[i].name).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "category names must be unique and non-empty: '" +
                      categories_[i].name + "'");
    }
  }
}

CategoryTable CategoryTable::maritime() {
  return CategoryTable({{0, "motor_boat"}, {1, "sailing_boat"}, {2, "seamark"}});
}

const std::string& CategoryTable::name(int id) const {
  if (!contains(id)) {
    throw Error(ErrorCode::kOutOfRange, "unknown category id " + std::to_string(id));
  }
  return categories_[static_cast<std::size_t>(id)].name;
}

std::optional<int> CategoryTable::id_of(std::string_view name) const {
  for (const auto& c : categories_) {
    if (c.name == name) return c.id;
  }
  return std::nullopt;
}

void Dataset::validate() const {
  std::unordered_set<std::int64_t> ids;
  for (const auto& image : images) {
    const std::string where = "image " + std::to_string(image.image_id);
    if (!ids.insert(image.image_id).second) {
      throw Error(ErrorCode::kInvalidDataset, "duplicate " + where);
    }
    if (image.width <= 0 || image.height <= 0) {
      throw Error(ErrorCode::kInvalidImageGeometry, where + " has non-positive size");
    }
    if (image.split != Split::kTrain && image.domain != Domain::kReal) {
      throw Error(ErrorCode::kSplitPurity,
                  where + " is in " + std::string(to_string(image.split)) +
                      " but has domain " + std::string(to_string(image.domain)));
    }
    std::unordered_set<int> instance_ids;
    for (const auto& ann : image.annotations) {
      if (!categories.contains(ann.category_id)) {
        throw Error(ErrorCode::kInvalidDataset,
                    where + " references unknown category " +
                        std::to_string(ann.category_id));
      }
      if (!instance_ids.insert(ann.instance_id).second) {
        throw Error(ErrorCode::kInvalidDataset,
                    where + " repeats instance id " + std::to_string(ann.instance_id));
      }
      validate_box(ann.bbox, image.width, image.height);
    }
  }
}

const ImageRecord* Dataset::find(std::int64_t image_id) const {
  auto it = std::find_if(images.begin(), images.end(),
                         [&](const ImageRecord& r) { return r.image_id == image_id; });
  return it == images.end() ? nullptr : &*it;
}

std::int64_t Dataset::next_image_id() const {
  std::int64_t next = 0;
  for (const auto& image : images) next = std::max(next, image.image_id + 1);
  return next;
}

Dataset merge(Dataset a, const Dataset& b) {
  if (a.images.empty() && a.categories.size() == 0) a.categories = b.categories;
  if (!(a.categories == b.categories)) {
    throw Error(ErrorCode::kInvalidDataset, "cannot merge datasets with different categories");
  }
  a.images.insert(a.images.end(), b.images.begin(), b.images.end());
  a.validate();
  return a;
}

}  // namespace seadet
