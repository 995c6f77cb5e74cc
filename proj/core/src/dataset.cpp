#include "fedcs/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "fedcs/error.hpp"
#include "json.hpp"

namespace fedcs::learning {
namespace {

std::vector<double> draw_centres(std::size_t n_features, std::size_t n_classes, double separation,
                                 RngStream& rng) {
  std::vector<double> centres(n_classes * n_features);
  for (auto& c : centres) c = separation * rng.standard_normal();
  return centres;
}

Dataset draw_samples(std::size_t n_samples, std::size_t n_features, std::size_t n_classes,
                     const std::vector<double>& centres, RngStream& rng) {
  Dataset d;
  d.n_features = n_features;
  d.n_classes = n_classes;
  d.features.resize(n_samples * n_features);
  d.labels.resize(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const auto label = i % n_classes;
    d.labels[i] = static_cast<int>(label);
    for (std::size_t f = 0; f < n_features; ++f) {
      d.features[i * n_features + f] = centres[label * n_features + f] + rng.standard_normal();
    }
  }
  return d;
}

void check_shape(std::size_t n_features, std::size_t n_classes) {
  if (n_features == 0) throw ParameterError("dataset needs at least one feature");
  if (n_classes < 2) throw ParameterError("dataset needs at least two classes");
}

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return (v >> 24) | ((v >> 8) & 0x0000ff00U) | ((v << 8) & 0x00ff0000U) | (v << 24);
  }
  return v;
}

}  // namespace

Dataset make_gaussian_blobs(std::size_t n_samples, std::size_t n_features, std::size_t n_classes,
                            double separation, RngStream& rng) {
  check_shape(n_features, n_classes);
  const auto centres = draw_centres(n_features, n_classes, separation, rng);
  return draw_samples(n_samples, n_features, n_classes, centres, rng);
}

BlobSplit make_gaussian_blob_split(std::size_t n_train, std::size_t n_test, std::size_t n_features,
                                   std::size_t n_classes, double separation, RngStream& rng) {
  check_shape(n_features, n_classes);
  const auto centres = draw_centres(n_features, n_classes, separation, rng);
  BlobSplit split;
  split.train = draw_samples(n_train, n_features, n_classes, centres, rng);
  split.test = draw_samples(n_test, n_features, n_classes, centres, rng);
  return split;
}

Dataset load_dataset(const std::filesystem::path& path) {
  auto sidecar_path = path;
  sidecar_path += ".json";
  std::ifstream sidecar_in(sidecar_path);
  if (!sidecar_in) throw IoError("cannot open dataset sidecar " + sidecar_path.string());

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(sidecar_in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed dataset sidecar " + sidecar_path.string() + ": " + e.what());
  }

  Dataset d;
  std::size_t n_samples = 0;
  std::string format = path.extension() == ".csv" ? "csv" : "binary";
  try {
    n_samples = meta.at("n_samples").get<std::size_t>();
    d.n_features = meta.at("n_features").get<std::size_t>();
    d.n_classes = meta.at("n_classes").get<std::size_t>();
    if (meta.contains("format")) format = meta.at("format").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("dataset sidecar " + sidecar_path.string() + ": " + e.what());
  }
  check_shape(d.n_features, d.n_classes);
  d.features.reserve(n_samples * d.n_features);
  d.labels.reserve(n_samples);

  auto push_label = [&](long long label) {
    if (label < 0 || static_cast<std::size_t>(label) >= d.n_classes) {
      throw IoError("dataset label " + std::to_string(label) + " outside [0, n_classes)");
    }
    d.labels.push_back(static_cast<int>(label));
  };

  if (format == "csv") {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream row(line);
      std::string cell;
      std::size_t count = 0;
      try {
        std::getline(row, cell, ',');
        push_label(std::stoll(cell));
        while (std::getline(row, cell, ',')) {
          d.features.push_back(std::stod(cell));
          ++count;
        }
      } catch (const std::logic_error&) {
        throw IoError("dataset row " + std::to_string(d.labels.size() + 1) + ": bad number '" +
                      cell + "'");
      }
      if (count != d.n_features) {
        throw IoError("dataset row " + std::to_string(d.labels.size()) + " has " +
                      std::to_string(count) + " features, expected " +
                      std::to_string(d.n_features));
      }
    }
  } else if (format == "binary") {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset " + path.string());
    for (std::size_t i = 0; i < n_samples; ++i) {
      std::uint32_t raw = 0;
      if (!in.read(reinterpret_cast<char*>(&raw), sizeof raw)) {
        throw IoError("dataset truncated at record " + std::to_string(i));
      }
      push_label(static_cast<std::int32_t>(to_little_endian(raw)));
      for (std::size_t f = 0; f < d.n_features; ++f) {
        if (!in.read(reinterpret_cast<char*>(&raw), sizeof raw)) {
          throw IoError("dataset truncated at record " + std::to_string(i));
        }
        d.features.push_back(std::bit_cast<float>(to_little_endian(raw)));
      }
    }
  } else {
    throw IoError("unknown dataset format '" + format + "'");
  }

  if (d.labels.size() != n_samples) {
    throw IoError("dataset has " + std::to_string(d.labels.size()) + " samples, sidecar says " +
                  std::to_string(n_samples));
  }
  return d;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path, bool binary) {
  if (binary) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset " + path.string());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto label = to_little_endian(static_cast<std::uint32_t>(data.labels[i]));
      out.write(reinterpret_cast<const char*>(&label), sizeof label);
      for (double v : data.row(i)) {
        const auto bits = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
      }
    }
  } else {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset " + path.string());
    out.precision(17);
    for (std::size_t i = 0; i < data.size(); ++i) {
      out << data.labels[i];
      for (double v : data.row(i)) out << ',' << v;
      out << '\n';
    }
  }
  auto sidecar_path = path;
  sidecar_path += ".json";
  std::ofstream sidecar(sidecar_path);
  if (!sidecar) throw IoError("cannot write dataset sidecar " + sidecar_path.string());
  sidecar << nlohmann::json{{"n_samples", data.size()},
                            {"n_features", data.n_features},
                            {"n_classes", data.n_classes},
                            {"format", binary ? "binary" : "csv"}}
                 .dump(2)
          << '\n';
}

}  // namespace fedcs::learning
