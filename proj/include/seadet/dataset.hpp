#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace seadet {

using Json = nlohmann::ordered_json;

enum class Domain { kReal, kSynthetic, kAugmented };
enum class Split { kTrain, kVal, kTest };
enum class AnnotationSource { kOriginal, kPasted };

inline constexpr std::array<Domain, 3> kAllDomains = {
    Domain::kReal, Domain::kSynthetic, Domain::kAugmented};
inline constexpr std::array<Split, 3> kAllSplits = {Split::kTrain, Split::kVal,
                                                    Split::kTest};

std::string_view to_string(Domain d);
std::string_view to_string(Split s);
std::string_view to_string(AnnotationSource s);
Domain parse_domain(std::string_view text);
Split parse_split(std::string_view text);
AnnotationSource parse_source(std::string_view text);

inline std::size_t index_of(Domain d) { return static_cast<std::size_t>(d); }
inline std::size_t index_of(Split s) { return static_cast<std::size_t>(s); }

// YOLO-style box: center and size as fractions of the image dimensions.
struct BBoxNorm {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool operator==(const BBoxNorm&) const = default;
};

// COCO-style box: top-left corner and size in pixels.
struct BBoxAbs {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }

  bool operator==(const BBoxAbs&) const = default;
};

struct Category {
  int id = 0;
  std::string name;

  bool operator==(const Category&) const = default;
};

// Ordered category list. Ids are contiguous from 0 and names are unique.
class CategoryTable {
 public:
  CategoryTable() = default;
  explicit CategoryTable(std::vector<Category> categories);

  // motor_boat, sailing_boat, seamark
  static CategoryTable maritime();

  std::size_t size() const { return categories_.size(); }
  bool contains(int id) const {
    return id >= 0 && static_cast<std::size_t>(id) < categories_.size();
  }
  const std::string& name(int id) const;
  std::optional<int> id_of(std::string_view name) const;
  const std::vector<Category>& entries() const { return categories_; }

  bool operator==(const CategoryTable&) const = default;

 private:
  std::vector<Category> categories_;
};

struct Annotation {
  int category_id = 0;
  BBoxAbs bbox;
  AnnotationSource source = AnnotationSource::kOriginal;
  int instance_id = 0;

  bool operator==(const Annotation&) const = default;
};

struct ImageRecord {
  std::int64_t image_id = 0;
  int width = 0;
  int height = 0;
  std::string file_path;
  Domain domain = Domain::kReal;
  Split split = Split::kTrain;
  std::vector<Annotation> annotations;

  bool operator==(const ImageRecord&) const = default;
};

struct Dataset {
  CategoryTable categories;
  std::vector<ImageRecord> images;

  // Throws Error on any invariant violation: duplicate image ids, bad
  // geometry, out-of-bounds boxes, unknown categories, duplicate instance
  // ids, or non-real images in val/test.
  void validate() const;

  const ImageRecord* find(std::int64_t image_id) const;
  std::int64_t next_image_id() const;

  bool operator==(const Dataset&) const = default;
};

// Concatenates b onto a. Category tables must agree; image ids must stay
// unique.
Dataset merge(Dataset a, const Dataset& b);

// --- Box conversion -------------------------------------------------------

// Tolerance for normalized-box overflow before a box counts as clamped.
inline constexpr double kNormEpsilon = 1e-6;

// Normalized center form to absolute corner form, clamped to the image.
// Throws kInvalidImageGeometry for non-positive dimensions, kInvalidBox for
// non-finite or non-positive sizes, kDegenerateBox when the clamped box is
// thinner than 1e-9 px.
BBoxAbs yolo_to_coco_box(const BBoxNorm& b, int width, int height);

// True when the box extends past the image by more than kNormEpsilon and
// would be clamped by yolo_to_coco_box.
bool yolo_box_overflows(const BBoxNorm& b);

// Exact algebraic inverse of yolo_to_coco_box for in-bounds boxes.
BBoxNorm coco_to_yolo_box(const BBoxAbs& b, int width, int height);

// Checks BBoxAbs invariants against the image; throws kInvalidBox.
void validate_box(const BBoxAbs& b, int width, int height);

// --- YOLO directory loading -----------------------------------------------

struct LoadReport {
  std::size_t images = 0;
  std::size_t annotations = 0;
  std::size_t missing_label_files = 0;
  std::size_t unknown_class = 0;
  std::size_t malformed_lines = 0;
  std::size_t clamped_boxes = 0;
  std::size_t degenerate_boxes = 0;
  std::size_t unreadable_images = 0;
  std::vector<std::string> warnings;

  Json to_json() const;
};

struct LoadResult {
  Dataset dataset;
  LoadReport report;
};

struct YoloLoadOptions {
  Split split = Split::kTrain;
  Domain domain = Domain::kReal;
  // Ids are assigned consecutively from here in sorted file-path order.
  std::int64_t first_image_id = 0;
  // Parallel workers for header reads and label parsing; 0 = default.
  int jobs = 1;
};

// Loads images_dir/* with labels_dir/<stem>.txt. Images are ordered by
// sorted file path. Throws kSplitPurity for a non-real val/test request.
LoadResult load_yolo_dataset(const std::filesystem::path& images_dir,
                             const std::filesystem::path& labels_dir,
                             const CategoryTable& categories,
                             const YoloLoadOptions& options = {});

// Parses one label line. Returns nullopt for blank lines.
struct ParsedLabel {
  int class_id = 0;
  BBoxNorm box;
};
enum class LabelParseStatus { kOk, kBlank, kMalformed };
LabelParseStatus parse_label_line(std::string_view line, ParsedLabel& out);

// Writes a YOLO label file for one image (used by fixtures and exports).
void write_yolo_labels(const std::filesystem::path& path,
                       const ImageRecord& image);

// --- JSON documents -------------------------------------------------------

// Stock COCO document: images, annotations, categories. Annotation ids
// are 1-based, assigned in (image_id, annotation index) order.
Json export_coco_json(const Dataset& d);

// Native manifest: the COCO document plus `domain`/`split` per image and
// `source`/`instance_id` per annotation.
Json to_manifest_json(const Dataset& d);

struct ImportDefaults {
  Domain domain = Domain::kReal;
  Split split = Split::kTest;
};

// Reads either a manifest or a stock COCO document. Missing extension
// fields take the defaults. The result is validated.
Dataset dataset_from_json(const Json& doc, const ImportDefaults& defaults = {});

// Manifest files store image paths relative to the manifest directory.
void save_manifest(const std::filesystem::path& path, const Dataset& d);
Dataset load_manifest(const std::filesystem::path& path);

Json read_json_file(const std::filesystem::path& path);
// Two-space indented dump with trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& doc);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Content hash over image records (file names only, not directories) and
// the bytes of every readable image file.
std::string dataset_fingerprint(const Dataset& d);
std::string split_fingerprint(const Dataset& d, Split split);

// --- Statistics -----------------------------------------------------------

struct SplitStats {
  std::size_t num_classes = 0;
  // images[split][domain]
  std::array<std::array<std::size_t, 3>, 3> images{};
  // instances[split][class]
  std::array<std::vector<std::size_t>, 3> instances;

  std::size_t image_count(Split s, Domain d) const {
    return images[index_of(s)][index_of(d)];
  }
  std::size_t image_total(Split s) const;
  std::size_t instance_count(Split s, int class_id) const;
  std::size_t instance_total(Split s) const;
  std::vector<std::size_t> class_totals() const;

  Json to_json(const CategoryTable& categories) const;
};

SplitStats split_stats(const Dataset& d);

// Markdown in the layout Split | Real | Synthetic | Augmented | Total.
std::string render_split_table(const SplitStats& stats);
// Markdown per-class instance table: Class | Train | Validation | Test.
std::string render_class_table(const SplitStats& stats,
                               const CategoryTable& categories);

// 8993 -> "8,993"
std::string with_thousands(std::size_t value);

}  // namespace seadet
