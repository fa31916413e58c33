// Checks run directories (or single artifacts) against schemas/<artifact>.schema.json and,
// for directories, the manifest hashes.
#include "anosov/io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace anosov;

#ifndef ANOSOV_SCHEMA_DIR
#define ANOSOV_SCHEMA_DIR "schemas"
#endif

namespace {

int problems = 0;

void report(const std::string& what, const std::vector<std::string>& errs) {
  for (const auto& e : errs) std::cout << what << ": " << e << "\n";
  problems += int(errs.size());
}

void check_file(const fs::path& schemas, const fs::path& file) {
  const fs::path schema = schemas / (file.filename().string() + ".schema.json");
  if (!fs::exists(schema)) {
    report(file.string(), {"no schema " + schema.string()});
    return;
  }
  const auto spec = nlohmann::json::parse(io::read_file(schema));
  const auto errs = io::validate_artifact(spec, io::read_file(file));
  report(file.string(), errs);
  if (errs.empty()) std::cout << file.string() << ": ok\n";
}

void check_dir(const fs::path& schemas, const fs::path& dir) {
  std::istringstream manifest(io::read_file(dir / "manifest.txt"));
  int listed = 0;
  for (std::string line; std::getline(manifest, line);) {
    std::istringstream s(line);
    std::string tag, name, key, sha;
    s >> tag;
    if (tag != "artifact") continue;
    s >> name >> key >> sha;
    ++listed;
    const fs::path file = dir / name;
    if (!fs::exists(file)) {
      report(file.string(), {"listed in the manifest but missing"});
      continue;
    }
    if (io::sha256_hex(io::read_file(file)) != sha) report(file.string(), {"sha256 differs from the manifest"});
    check_file(schemas, file);
  }
  if (listed == 0) report(dir.string(), {"manifest lists no artifacts"});
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"validate anosov artifacts against the shipped schemas"};
  std::string schemas = ANOSOV_SCHEMA_DIR;
  std::vector<std::string> targets;
  app.add_option("--schemas", schemas, "schema directory");
  app.add_option("targets", targets, "run directories or artifact files")->required();
  CLI11_PARSE(app, argc, argv);
  try {
    for (const auto& t : targets) {
      if (fs::is_directory(t)) check_dir(schemas, t);
      else check_file(schemas, t);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 66;
  }
  return problems == 0 ? 0 : 1;
}
