#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "seadet/dataset.hpp"
#include "seadet/error.hpp"
#include "seadet/hash.hpp"

namespace seadet {
namespace fs = std::filesystem;
namespace {

std::vector<const ImageRecord*> sorted_images(const Dataset& d) {
  std::vector<const ImageRecord*> out;
  out.reserve(d.images.size());
  for (const auto& image : d.images) out.push_back(&image);
  std::stable_sort(out.begin(), out.end(), [](const ImageRecord* a, const ImageRecord* b) {
    return a->image_id < b->image_id;
  });
  return out;
}

Json categories_json(const CategoryTable& categories) {
  Json out = Json::array();
  for (const auto& c : categories.entries()) out.push_back({{"id", c.id}, {"name", c.name}});
  return out;
}

enum class Flavor { kCoco, kManifest };

Json build_document(const Dataset& d, Flavor flavor) {
  Json images = Json::array();
  Json annotations = Json::array();
  std::int64_t next_ann_id = 1;
  for (const ImageRecord* image : sorted_images(d)) {
    Json entry{{"id", image->image_id},
               {"width", image->width},
               {"height", image->height},
               {"file_name", flavor == Flavor::kCoco
                                 ? fs::path(image->file_path).filename().string()
                                 : image->file_path}};
    if (flavor == Flavor::kManifest) {
      entry["domain"] = to_string(image->domain);
      entry["split"] = to_string(image->split);
    }
    images.push_back(std::move(entry));
    for (const auto& ann : image->annotations) {
      Json a{{"id", next_ann_id++},
             {"image_id", image->image_id},
             {"category_id", ann.category_id},
             {"bbox", {ann.bbox.x, ann.bbox.y, ann.bbox.w, ann.bbox.h}},
             {"area", ann.bbox.area()},
             {"iscrowd", 0}};
      if (flavor == Flavor::kManifest) {
        a["source"] = to_string(ann.source);
        a["instance_id"] = ann.instance_id;
      }
      annotations.push_back(std::move(a));
    }
  }
  Json doc;
  if (flavor == Flavor::kManifest) doc["info"] = {{"format", "seadet-manifest"}, {"version", 1}};
  doc["images"] = std::move(images);
  doc["annotations"] = std::move(annotations);
  doc["categories"] = categories_json(d.categories);
  return doc;
}

template <typename T>
T required(const Json& obj, const char* key, const char* what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw Error(ErrorCode::kInvalidDataset, std::string(what) + " is missing '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidDataset,
                std::string(what) + " field '" + key + "': " + e.what());
  }
}

}  // namespace

Json export_coco_json(const Dataset& d) { return build_document(d, Flavor::kCoco); }

Json to_manifest_json(const Dataset& d) { return build_document(d, Flavor::kManifest); }

Dataset dataset_from_json(const Json& doc, const ImportDefaults& defaults) {
  if (!doc.is_object()) throw Error(ErrorCode::kInvalidDataset, "document is not an object");
  for (const char* key : {"images", "annotations", "categories"}) {
    if (!doc.contains(key) || !doc.at(key).is_array()) {
      throw Error(ErrorCode::kInvalidDataset, std::string("missing array '") + key + "'");
    }
  }
  std::vector<Category> categories;
  for (const auto& c : doc.at("categories")) {
    categories.push_back(
        {required<int>(c, "id", "category"), required<std::string>(c, "name", "category")});
  }
  std::sort(categories.begin(), categories.end(),
            [](const Category& a, const Category& b) { return a.id < b.id; });

  Dataset d;
  d.categories = CategoryTable(std::move(categories));
  std::map<std::int64_t, std::size_t> by_id;
  for (const auto& entry : doc.at("images")) {
    ImageRecord record;
    record.image_id = required<std::int64_t>(entry, "id", "image");
    record.width = required<int>(entry, "width", "image");
    record.height = required<int>(entry, "height", "image");
    record.file_path = required<std::string>(entry, "file_name", "image");
    record.domain = entry.contains("domain")
                        ? parse_domain(entry.at("domain").get<std::string>())
                        : defaults.domain;
    record.split = entry.contains("split") ? parse_split(entry.at("split").get<std::string>())
                                           : defaults.split;
    if (!by_id.emplace(record.image_id, d.images.size()).second) {
      throw Error(ErrorCode::kInvalidDataset,
                  "duplicate image id " + std::to_string(record.image_id));
    }
    d.images.push_back(std::move(record));
  }
  for (const auto& entry : doc.at("annotations")) {
    const auto image_id = required<std::int64_t>(entry, "image_id", "annotation");
    auto it = by_id.find(image_id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kInvalidDataset,
                  "annotation references unknown image " + std::to_string(image_id));
    }
    ImageRecord& image = d.images[it->second];
    const auto bbox = required<std::vector<double>>(entry, "bbox", "annotation");
    if (bbox.size() != 4) throw Error(ErrorCode::kInvalidDataset, "bbox must have 4 values");
    Annotation ann;
    ann.category_id = required<int>(entry, "category_id", "annotation");
    ann.bbox = {bbox[0], bbox[1], bbox[2], bbox[3]};
    ann.source = entry.contains("source") ? parse_source(entry.at("source").get<std::string>())
                                          : AnnotationSource::kOriginal;
    ann.instance_id = entry.contains("instance_id") ? entry.at("instance_id").get<int>()
                                                    : static_cast<int>(image.annotations.size());
    image.annotations.push_back(ann);
  }
  d.validate();
  return d;
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kIo, "invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void write_json_file(const fs::path& path, const Json& doc) {
  write_text_file(path, doc.dump(2) + "\n");
}

void save_manifest(const fs::path& path, const Dataset& d) {
  Dataset copy = d;
  const fs::path base = fs::absolute(path).parent_path();
  for (auto& image : copy.images) {
    const fs::path p(image.file_path);
    if (p.is_absolute() || fs::exists(p)) {
      image.file_path = fs::absolute(p).lexically_normal().lexically_relative(base).generic_string();
    }
  }
  write_json_file(path, to_manifest_json(copy));
}

Dataset load_manifest(const fs::path& path) {
  Dataset d = dataset_from_json(read_json_file(path));
  const fs::path base = fs::absolute(path).parent_path();
  for (auto& image : d.images) {
    const fs::path p(image.file_path);
    if (p.is_relative()) image.file_path = (base / p).lexically_normal().string();
  }
  return d;
}

namespace {

std::string fingerprint_of(const Dataset& d, std::optional<Split> split) {
  Dataset subset;
  subset.categories = d.categories;
  for (const auto& image : d.images) {
    if (split && image.split != *split) continue;
    subset.images.push_back(image);
  }
  std::vector<std::string> paths;
  for (auto& image : subset.images) {
    paths.push_back(image.file_path);
    image.file_path = fs::path(image.file_path).filename().string();
  }
  Sha256 h;
  h.update(to_manifest_json(subset).dump());
  // Pixel content, in record order.
  for (const auto& path : paths) {
    std::error_code ec;
    if (!path.empty() && fs::is_regular_file(path, ec)) {
      h.update("\n");
      h.update_file(path);
    }
  }
  return h.hex_digest();
}

}  // namespace

std::string dataset_fingerprint(const Dataset& d) { return fingerprint_of(d, std::nullopt); }

std::string split_fingerprint(const Dataset& d, Split split) { return fingerprint_of(d, split); }

}  // namespace seadet
