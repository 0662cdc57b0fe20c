#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vis_presence/annotator.hpp"
#include "vis_presence/error.hpp"

namespace {

constexpr int kExitUnsupported = 2;
constexpr int kExitAlreadyAnnotated = 3;

}  // namespace

int main(int argc, char** argv) {
  using namespace vis_presence;
  namespace an = vis_presence::annotator;

  CLI::App app{"Adds collaborator cursor representations to a Vega-Lite specification"};
  std::string mode_name;
  std::string in_path;
  std::string out_path;
  app.add_option("--mode", mode_name, "generic | specific | legend | thumbnail (default: chosen from the spec)")
      ->check(CLI::IsMember({"generic", "specific", "legend", "thumbnail"}));
  app.add_option("--in", in_path, "input Vega-Lite JSON")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "output path (default: stdout)");
  CLI11_PARSE(app, argc, argv);

  try {
    std::ifstream in(in_path);
    std::stringstream text;
    text << in.rdbuf();
    const an::VisSpec spec = an::VisSpec::parse(text.str());
    const auto kinds = an::parse_interactions(spec);
    const an::RepresentationMode mode =
        mode_name.empty() ? an::choose_default_mode(kinds) : *an::mode_from_string(mode_name);
    const std::string output = an::annotate(spec, mode, kinds).dump(2) + "\n";

    if (out_path.empty()) {
      std::cout << output;
    } else {
      std::ofstream out(out_path);
      out << output;
      if (!out) {
        std::cerr << "vis-presence-annotate: cannot write " << out_path << "\n";
        return 1;
      }
    }
  } catch (const Error& e) {
    std::cerr << "vis-presence-annotate: " << e.what() << "\n";
    if (e.code() == ErrorCode::UnsupportedSpec) return kExitUnsupported;
    if (e.code() == ErrorCode::AlreadyAnnotated) return kExitAlreadyAnnotated;
    return 1;
  }
  return 0;
}
