#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "seadet/dataset.hpp"
#include "seadet/error.hpp"
#include "seadet/parallel.hpp"
#include "seadet/raster.hpp"

namespace seadet {
namespace fs = std::filesystem;
namespace {

bool is_image_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

bool parse_double(std::string_view token, double& out) {
  const char* first = token.data();
  const char* last = first + token.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

struct FileResult {
  bool readable = false;
  int width = 0;
  int height = 0;
  std::vector<Annotation> annotations;
  LoadReport report;
};

FileResult load_one(const fs::path& image_path, const fs::path& labels_dir,
                    const CategoryTable& categories) {
  FileResult result;
  auto size = read_image_size(image_path);
  if (!size || size->first <= 0 || size->second <= 0) {
    result.report.unreadable_images = 1;
    result.report.warnings.push_back("unreadable image " + image_path.string());
    return result;
  }
  result.readable = true;
  result.width = size->first;
  result.height = size->second;

  const fs::path label_path = labels_dir / (image_path.stem().string() + ".txt");
  std::ifstream in(label_path);
  if (!in) {
    result.report.missing_label_files = 1;
    result.report.warnings.push_back("missing label file " + label_path.string());
    return result;
  }
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    ParsedLabel parsed;
    const auto status = parse_label_line(line, parsed);
    if (status == LabelParseStatus::kBlank) continue;
    const std::string where = label_path.string() + ":" + std::to_string(line_no);
    if (status == LabelParseStatus::kMalformed) {
      ++result.report.malformed_lines;
      result.report.warnings.push_back("malformed line " + where);
      continue;
    }
    if (!categories.contains(parsed.class_id)) {
      ++result.report.unknown_class;
      result.report.warnings.push_back("unknown class " + std::to_string(parsed.class_id) +
                                       " at " + where);
      continue;
    }
    if (yolo_box_overflows(parsed.box)) ++result.report.clamped_boxes;
    try {
      const BBoxAbs box = yolo_to_coco_box(parsed.box, result.width, result.height);
      result.annotations.push_back({parsed.class_id, box, AnnotationSource::kOriginal,
                                    static_cast<int>(result.annotations.size())});
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kDegenerateBox) {
        ++result.report.degenerate_boxes;
      } else {
        ++result.report.malformed_lines;
      }
      result.report.warnings.push_back(std::string(e.what()) + " at " + where);
    }
  }
  return result;
}

}  // namespace

LabelParseStatus parse_label_line(std::string_view line, ParsedLabel& out) {
  std::array<std::string_view, 5> tokens;
  std::size_t count = 0;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (count == tokens.size()) return LabelParseStatus::kMalformed;
    tokens[count++] = line.substr(i, j - i);
    i = j;
  }
  if (count == 0) return LabelParseStatus::kBlank;
  if (count != tokens.size()) return LabelParseStatus::kMalformed;

  double cls = 0.0;
  if (!parse_double(tokens[0], cls) || cls != std::floor(cls) || std::fabs(cls) > 1e9) {
    return LabelParseStatus::kMalformed;
  }
  std::array<double, 4> v{};
  for (std::size_t k = 0; k < 4; ++k) {
    if (!parse_double(tokens[k + 1], v[k])) return LabelParseStatus::kMalformed;
  }
  if (v[2] <= 0.0 || v[3] <= 0.0) return LabelParseStatus::kMalformed;
  out.class_id = static_cast<int>(cls);
  out.box = {v[0], v[1], v[2], v[3]};
  return LabelParseStatus::kOk;
}

LoadResult load_yolo_dataset(const fs::path& images_dir, const fs::path& labels_dir,
                             const CategoryTable& categories,
                             const YoloLoadOptions& options) {
  if (options.split != Split::kTrain && options.domain != Domain::kReal) {
    throw Error(ErrorCode::kSplitPurity,
                std::string(to_string(options.split)) + " split must be real, got " +
                    std::string(to_string(options.domain)));
  }
  if (!fs::is_directory(images_dir)) {
    throw Error(ErrorCode::kIo, "not a directory: " + images_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  std::vector<FileResult> per_file(files.size());
  parallel_for(files.size(), options.jobs, [&](std::size_t i) {
    per_file[i] = load_one(files[i], labels_dir, categories);
  });

  LoadResult out;
  out.dataset.categories = categories;
  std::int64_t next_id = options.first_image_id;
  for (std::size_t i = 0; i < files.size(); ++i) {
    FileResult& r = per_file[i];
    LoadReport& rep = out.report;
    rep.missing_label_files += r.report.missing_label_files;
    rep.unknown_class += r.report.unknown_class;
    rep.malformed_lines += r.report.malformed_lines;
    rep.clamped_boxes += r.report.clamped_boxes;
    rep.degenerate_boxes += r.report.degenerate_boxes;
    rep.unreadable_images += r.report.unreadable_images;
    rep.warnings.insert(rep.warnings.end(), r.report.warnings.begin(),
                        r.report.warnings.end());
    if (!r.readable) continue;
    ImageRecord record;
    record.image_id = next_id++;
    record.width = r.width;
    record.height = r.height;
    record.file_path = files[i].string();
    record.domain = options.domain;
    record.split = options.split;
    record.annotations = std::move(r.annotations);
    rep.annotations += record.annotations.size();
    out.dataset.images.push_back(std::move(record));
  }
  out.report.images = out.dataset.images.size();
  out.dataset.validate();
  return out;
}

void write_yolo_labels(const fs::path& path, const ImageRecord& image) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.precision(10);
  for (const auto& ann : image.annotations) {
    const BBoxNorm b = coco_to_yolo_box(ann.bbox, image.width, image.height);
    out << ann.category_id << ' ' << b.cx << ' ' << b.cy << ' ' << b.w << ' ' << b.h
        << '\n';
  }
}

Json LoadReport::to_json() const {
  return Json{{"images", images},
              {"annotations", annotations},
              {"missing_label_files", missing_label_files},
              {"unknown_class", unknown_class},
              {"malformed_lines", malformed_lines},
              {"clamped_boxes", clamped_boxes},
              {"degenerate_boxes", degenerate_boxes},
              {"unreadable_images", unreadable_images},
              {"warnings", warnings}};
}

}  // namespace seadet
