// wgimg: simulate terminated-waveguide scattering data and image it.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "wgimg/scenario.hpp"

namespace {

int exit_code(wgimg::ErrorKind k) {
  using wgimg::ErrorKind;
  switch (k) {
    case ErrorKind::ConfigError:
    case ErrorKind::InvalidArgument:
      return 2;
    case ErrorKind::DataMismatch:
    case ErrorKind::MalformedFile:
    case ErrorKind::GridMismatch:
    case ErrorKind::IoError:
    case ErrorKind::PartialApertureError:
    case ErrorKind::UnderdeterminedAperture:
    case ErrorKind::EmptyArray:
      return 4;
    default:
      return 3;
  }
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  for (const auto& item : wgimg::detail::split_list(s)) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Terminated-waveguide scattering simulation and imaging"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string methods;
  std::string thresholds;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "output directory (default: the config's output key)");
    sub->add_option("--seed", seed, "noise seed override");
    sub->add_option("--method", methods, "comma-separated methods: factorization, mig_sharp, mig");
    sub->add_option("--threshold", thresholds, "comma-separated mask thresholds in [0, 1]");
  };

  auto* simulate = app.add_subcommand("simulate", "solve the forward problem, one response file per wavenumber");
  common(simulate);

  std::vector<std::string> data_files;
  auto* image = app.add_subcommand("image", "image response files with the configured methods");
  common(image);
  image->add_option("data", data_files, "response files, one per configured wavenumber");

  std::vector<double> z;
  auto* kernels = app.add_subcommand("kernels", "tabulate |K0(., z)| and |K(., z)| for the first wavenumber");
  common(kernels);
  kernels->add_option("--z", z, "kernel point x,xp (default: the config's kernel_z)")->expected(2)->delimiter(',');

  std::vector<std::string> images;
  auto* compare = app.add_subcommand("compare", "correlation, argmax distance and mask overlap of two images");
  common(compare);
  compare->add_option("images", images, "two image files")->required()->expected(2);

  CLI11_PARSE(app, argc, argv);

  try {
    wgimg::ScenarioConfig cfg = wgimg::load_config(config_path);
    if (seed) cfg.seed = *seed;
    if (!methods.empty()) cfg.methods = split_csv(methods);
    if (!thresholds.empty()) {
      cfg.thresholds = wgimg::detail::config_doubles("threshold", thresholds);
    }
    wgimg::validate_config(cfg);
    const std::filesystem::path out = out_dir.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(out_dir);

    if (*simulate) {
      for (const auto& rec : wgimg::cmd_simulate(cfg, out)) {
        std::printf("%s k=%.6g residual=%.3e\n", rec.file.string().c_str(), rec.k, rec.report.max_relative_residual);
      }
    } else if (*image) {
      if (data_files.empty()) {
        for (std::size_t i = 0; i < cfg.wavenumbers.size(); ++i) data_files.push_back((out / wgimg::response_file_name(i)).string());
      }
      std::vector<std::filesystem::path> files(data_files.begin(), data_files.end());
      for (const auto& s : wgimg::cmd_image(cfg, files, out)) std::cout << wgimg::detail::describe(s, cfg.thresholds) << '\n';
    } else if (*kernels) {
      const wgimg::Point zp = z.empty() ? cfg.kernel_z : wgimg::Point{z[0], z[1]};
      const auto s = wgimg::cmd_kernels(cfg, zp, out);
      std::printf("above_half K0=%ld K=%ld\n", s.above_half_k0, s.above_half_k);
    } else if (*compare) {
      const auto r = wgimg::cmd_compare(cfg, images[0], images[1]);
      std::printf("correlation=%.6f argmax_distance=%.6g\n", r.correlation, r.argmax_distance);
      for (std::size_t i = 0; i < r.jaccard.size(); ++i) {
        std::printf("jaccard@%g=%.6f\n", cfg.thresholds[i], r.jaccard[i]);
      }
    }
  } catch (const wgimg::Error& e) {
    std::cerr << "wgimg: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "wgimg: " << e.what() << '\n';
    return 4;
  }
  return 0;
}
