// Command line front end: classify an image, build the saliency landscape,
// search for multiple explanations, and emit the run artifacts
// (landscape.csv, landscape.ppm, explanation_<k>.pbm, report.json).

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cex/cex.hpp"

namespace {

struct CliOptions {
  std::string input;
  std::string classifier_cmd;
  std::string synthetic;
  std::string out_dir;
  std::uint64_t seed = 0;
  int iterations = 20;
  int floodlights = 10;
  int max_explanations = 10;
  double delta = 0.0;
  std::string mask_colour = "234,234,234";
  std::string strategy = "grid";
  std::string mode = "floodlight";
  double alpha = 1.1;
  double beta = 1.1;
  double radius = 0.0;
  int expansions = 4;
  double expansion_coeff = 1.4;
  int steps = 40;
  int workers = 0;
  int min_side = 0;
  int max_depth = 10;
  std::uint64_t timeout_ms = 30'000;
};

std::vector<int> parse_int_list(const std::string& text, char sep) {
  std::vector<int> values;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep)) values.push_back(std::stoi(item));
  return values;
}

cex::MaskingColour parse_colour(const std::string& text) {
  const std::vector<int> parts = parse_int_list(text, ',');
  if (parts.size() != 3) throw cex::Error("flags: --mask-colour expects R,G,B");
  for (int channel : parts) {
    if (channel < 0 || channel > 255) throw cex::Error("flags: colour channel outside 0..255");
  }
  return cex::MaskingColour{static_cast<std::uint8_t>(parts[0]),
                            static_cast<std::uint8_t>(parts[1]),
                            static_cast<std::uint8_t>(parts[2])};
}

cex::PixelSet rect_pixels(int x0, int y0, int x1, int y1, int width, int height) {
  return cex::rasterize(cex::Rect{x0, y0, x1, y1}, width, height);
}

/// Synthetic classifier specs:
///   constant:<label>
///   green_count:<threshold>[,<r>,<g>,<b>]
///   patch_or:x0,y0,x1,y1[;x0,y0,x1,y1...]   (reference = the input image)
cex::ClassifierHandle make_synthetic(const std::string& spec, const cex::Image& reference) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const std::string args = colon == std::string::npos ? "" : spec.substr(colon + 1);

  if (name == "constant") {
    return cex::make_constant_classifier(args.empty() ? 1 : std::stoi(args));
  }
  if (name == "green_count") {
    const std::vector<int> values = parse_int_list(args, ',');
    if (values.empty()) throw cex::Error("flags: green_count needs a threshold");
    cex::Rgb green{0, 255, 0};
    if (values.size() == 4) {
      green = cex::Rgb{static_cast<std::uint8_t>(values[1]), static_cast<std::uint8_t>(values[2]),
                       static_cast<std::uint8_t>(values[3])};
    } else if (values.size() != 1) {
      throw cex::Error("flags: green_count expects threshold[,r,g,b]");
    }
    return cex::make_green_count_classifier(static_cast<std::size_t>(values[0]), green);
  }
  if (name == "patch_or") {
    std::vector<cex::PixelSet> patches;
    std::stringstream stream(args);
    std::string patch_spec;
    while (std::getline(stream, patch_spec, ';')) {
      const std::vector<int> r = parse_int_list(patch_spec, ',');
      if (r.size() != 4) throw cex::Error("flags: patch_or patch expects x0,y0,x1,y1");
      patches.push_back(rect_pixels(r[0], r[1], r[2], r[3], reference.width(), reference.height()));
    }
    return cex::make_patch_or_classifier(std::move(patches), reference);
  }
  throw cex::Error("flags: unknown synthetic classifier '" + name + "'");
}

nlohmann::ordered_json explanation_json(const cex::Explanation& explanation,
                                        std::size_t image_pixels) {
  return nlohmann::ordered_json{
      {"label", explanation.label},
      {"confidence", explanation.confidence},
      {"size_px", explanation.pixels.cardinality()},
      {"size_frac",
       static_cast<double>(explanation.pixels.cardinality()) / static_cast<double>(image_pixels)},
      {"source",
       {{"origin", explanation.source.origin},
        {"floodlight", explanation.source.floodlight},
        {"seed", explanation.source.seed},
        {"final_radius", explanation.source.final_radius}}},
  };
}

int run(const CliOptions& options) {
  const cex::Image image = cex::decode_ppm(cex::read_binary_file(options.input));

  cex::ClassifierHandle classifier;
  if (!options.classifier_cmd.empty()) {
    classifier = cex::make_external_classifier(options.classifier_cmd,
                                               std::chrono::milliseconds(options.timeout_ms));
  } else {
    classifier = make_synthetic(options.synthetic, image);
  }

  cex::RexConfig config;
  config.iterations = options.iterations;
  config.floodlights = options.floodlights;
  config.max_explanations = options.max_explanations;
  config.delta = options.delta;
  config.colour = parse_colour(options.mask_colour);
  config.strategy.kind = options.strategy == "diagonal" ? cex::PartitionStrategy::Kind::Diagonal
                                                        : cex::PartitionStrategy::Kind::Grid;
  config.strategy.alpha = options.alpha;
  config.strategy.beta = options.beta;
  config.search.radius = options.radius;
  config.search.expansions = options.expansions;
  config.search.expansion_coeff = options.expansion_coeff;
  config.search.steps = options.steps;
  config.seed = options.seed;
  config.min_side = options.min_side;
  config.max_depth = options.max_depth;
  config.workers = options.workers;
  config.mode = options.mode == "recursive" ? cex::RexConfig::Mode::Recursive
                                            : cex::RexConfig::Mode::Floodlight;

  const cex::RexResult result = cex::run_pipeline(image, classifier, config);

  const std::filesystem::path out_dir(options.out_dir);
  std::filesystem::create_directories(out_dir);
  cex::write_text_file(out_dir / "landscape.csv", cex::landscape_to_csv(result.landscape));
  cex::write_binary_file(out_dir / "landscape.ppm",
                         cex::landscape_to_heatmap_ppm(result.landscape));
  for (std::size_t k = 0; k < result.explanations.size(); ++k) {
    cex::write_binary_file(out_dir / ("explanation_" + std::to_string(k) + ".pbm"),
                           cex::encode_pbm(result.explanations[k].pixels));
  }

  // Stage wall-clock goes to stdout only: report.json stays bit-identical
  // across reruns and worker counts.
  nlohmann::ordered_json report{
      {"input", options.input},
      {"seed", options.seed},
      {"config",
       {{"iterations", config.iterations},
        {"floodlights", config.floodlights},
        {"max_explanations", config.max_explanations},
        {"delta", config.delta},
        {"mask_colour", {config.colour.r, config.colour.g, config.colour.b}},
        {"strategy", options.strategy == "diagonal" ? "diagonal" : "grid"},
        {"alpha", config.strategy.alpha},
        {"beta", config.strategy.beta},
        {"mode", options.mode == "recursive" ? "recursive" : "floodlight"},
        {"search",
         {{"radius", config.search.resolve_radius(image.width(), image.height())},
          {"steps", config.search.steps},
          {"expansions", config.search.expansions},
          {"expansion_coeff", config.search.expansion_coeff}}},
        {"min_side", cex::resolve_min_side(config.min_side, image.width(), image.height())},
        {"max_depth", config.max_depth}}},
      {"verdict", {{"label", result.verdict.label}, {"confidence", result.verdict.confidence}}},
      {"explanations", nlohmann::ordered_json::array()},
      {"explanation_count", result.explanations.size()},
      {"classifier_calls", result.classifier_calls},
  };
  for (const cex::Explanation& explanation : result.explanations) {
    report["explanations"].push_back(explanation_json(explanation, image.pixel_count()));
  }
  cex::write_text_file(out_dir / "report.json", report.dump(2) + "\n");

  std::cout << "label " << result.verdict.label << " (confidence " << result.verdict.confidence
            << "), " << result.explanations.size() << " explanation(s), "
            << result.classifier_calls << " classifier calls\n"
            << "stages [ms]: rank " << result.timings.rank_ms << ", search "
            << result.timings.search_ms << ", drain " << result.timings.drain_ms << ", extract "
            << result.timings.extract_ms << ", total " << result.timings.total_ms << "\n"
            << "artifacts written to " << out_dir.string() << "\n";

  return result.explanations.empty() ? 2 : 0;
}

/// Fixture generator (hidden): exact responsibilities for random four-cell
/// instances, for use as frozen regression inputs.
int generate_fixtures(std::uint64_t seed, int count, const std::string& out_path) {
  nlohmann::ordered_json fixtures = nlohmann::ordered_json::array();
  for (int t = 0; t < count; ++t) {
    cex::Rng rng(cex::derive_seed(seed, {static_cast<std::uint64_t>(t)}));
    cex::Image image(4, 4);
    for (int y = 0; y < 4; ++y) {
      for (int x = 0; x < 4; ++x) {
        image.set(x, y, cex::Rgb{static_cast<std::uint8_t>(rng.below(200)),
                                 static_cast<std::uint8_t>(rng.below(200)),
                                 static_cast<std::uint8_t>(50 + rng.below(150))});
      }
    }
    std::vector<cex::PixelSet> cells;
    for (int cy = 0; cy < 2; ++cy) {
      for (int cx = 0; cx < 2; ++cx) {
        cells.push_back(rect_pixels(cx * 2, cy * 2, cx * 2 + 1, cy * 2 + 1, 4, 4));
      }
    }
    std::vector<int> table(16);
    for (std::size_t i = 0; i < table.size(); ++i) table[i] = rng.below(2) ? 1 : 0;
    table[15] = 1;

    cex::CellGrid grid{image, cex::make_cell_table_classifier(cells, image, table), 1, cells};
    nlohmann::ordered_json entry{{"seed", seed}, {"index", t}, {"table", table}};
    entry["responsibility"] = nlohmann::ordered_json::array();
    for (int c = 0; c < 4; ++c) {
      entry["responsibility"].push_back(
          cex::exact_responsibility(grid, c, cex::kDefaultMaskingColour));
    }
    fixtures.push_back(entry);
  }
  if (out_path.empty() || out_path == "-") {
    std::cout << fixtures.dump(2) << "\n";
  } else {
    cex::write_text_file(out_path, fixtures.dump(2) + "\n");
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple causal explanations for black-box image classifiers"};
  app.require_subcommand(0, 1);

  CliOptions options;
  app.add_option("--input", options.input, "Input image (binary PPM, P6)");
  app.add_option("--classifier-cmd", options.classifier_cmd,
                 "Command for an external classifier speaking the NDJSON protocol");
  app.add_option("--synthetic", options.synthetic,
                 "Built-in classifier spec: constant:<l> | green_count:<t>[,r,g,b] | "
                 "patch_or:x0,y0,x1,y1[;...]");
  app.add_option("--out", options.out_dir, "Output directory");
  app.add_option("--seed", options.seed, "Root seed for all randomized stages");
  app.add_option("--iterations", options.iterations, "Ranking iterations");
  app.add_option("--floodlights", options.floodlights, "Number of floodlight searches");
  app.add_option("--max-explanations", options.max_explanations, "Maximum explanations to emit");
  app.add_option("--delta", options.delta, "Maximum pairwise overlap (Sorensen-Dice)");
  app.add_option("--mask-colour", options.mask_colour, "Masking colour as R,G,B");
  app.add_option("--strategy", options.strategy, "Partition strategy: grid | diagonal")
      ->check(CLI::IsMember({"grid", "diagonal"}));
  app.add_option("--mode", options.mode, "Search mode: floodlight | recursive")
      ->check(CLI::IsMember({"floodlight", "recursive"}));
  app.add_option("--alpha", options.alpha, "Beta-binomial alpha for grid splits");
  app.add_option("--beta", options.beta, "Beta-binomial beta for grid splits");
  app.add_option("--radius", options.radius, "Initial floodlight radius (0 = min side / 8)");
  app.add_option("--expansions", options.expansions, "Radius expansions per step");
  app.add_option("--expansion-coeff", options.expansion_coeff, "Radius growth factor");
  app.add_option("--steps", options.steps, "Hill-climb steps per floodlight");
  app.add_option("--workers", options.workers, "Concurrent tasks (0 = hardware parallelism)");
  app.add_option("--min-side", options.min_side,
                 "Refinement floor in pixels (0 = a tenth of the short side)");
  app.add_option("--max-depth", options.max_depth, "Refinement depth cap");
  app.add_option("--timeout-ms", options.timeout_ms, "Per-call timeout for external classifiers");

  std::uint64_t fixture_seed = 0;
  int fixture_count = 10;
  std::string fixture_out = "-";
  CLI::App* fixtures = app.add_subcommand("gen-fixtures", "");
  fixtures->group("");  // hidden: test fixture generation
  fixtures->add_option("--seed", fixture_seed, "");
  fixtures->add_option("--count", fixture_count, "");
  fixtures->add_option("--out", fixture_out, "");

  CLI11_PARSE(app, argc, argv);

  try {
    if (fixtures->parsed()) return generate_fixtures(fixture_seed, fixture_count, fixture_out);

    if (options.input.empty() || options.out_dir.empty()) {
      std::cerr << "error: --input and --out are required\n";
      return 1;
    }
    if (options.classifier_cmd.empty() == options.synthetic.empty()) {
      std::cerr << "error: exactly one of --classifier-cmd or --synthetic is required\n";
      return 1;
    }
    return run(options);
  } catch (const cex::ClassifierError& e) {
    std::cerr << "classifier error: " << e.what() << "\n";
    return 1;
  } catch (const cex::DecodeError& e) {
    std::cerr << "decode error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
