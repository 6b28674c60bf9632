#include "spongecake_tools/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iomanip>
#include <optional>
#include <string>
#include <vector>

#include "spongecake/albedo.hpp"
#include "spongecake/errors.hpp"
#include "spongecake/material_io.hpp"
#include "spongecake/mc_oracle.hpp"
#include "spongecake/mlp.hpp"
#include "spongecake/multiscatter.hpp"
#include "spongecake_tools/dataset.hpp"
#include "spongecake_tools/image.hpp"
#include "spongecake_tools/lobe.hpp"
#include "spongecake_tools/params_io.hpp"
#include "spongecake_tools/render.hpp"
#include "spongecake_tools/sample_test.hpp"

namespace spongecake::tools {

namespace {

struct Globals {
  std::uint64_t seed = 0;
  unsigned threads = 0;
  std::string weights;
};

Vec3 direction(const std::vector<double>& v, const char* name) {
  const Vec3 w{v.at(0), v.at(1), v.at(2)};
  const double len = length(w);
  if (!(len > 0.0) || !std::isfinite(len))
    throw ParameterError(std::string(name) + " must be a non-zero finite vector");
  return w / len;
}

/// Added-lobe parameters from --params, else from --weights, else none.
std::optional<ThreeLobeParams> lobe_params(const LayerStack& stack, const Globals& g,
                                           const std::string& params_path) {
  if (!params_path.empty()) return load_params(params_path);
  if (!g.weights.empty()) return mlp_infer(load_weights(g.weights), stack);
  return std::nullopt;
}

void print_spectrum(std::ostream& out, const char* label, const Spectrum& s, int precision) {
  out << label << std::fixed << std::setprecision(precision) << ' ' << s.r << ' ' << s.g << ' ' << s.b << '\n';
}

std::filesystem::path preview_path(std::filesystem::path p) { return p.replace_extension(".png"); }

void write_outputs(const Image& image, const std::string& path, std::ostream& out) {
  write_pfm(image, path);
  write_png_preview(image, preview_path(path));
  out << "wrote " << path << " (" << image.width << "x" << image.height << ") and "
      << preview_path(path).string() << '\n';
}

void add_eval(CLI::App& app, Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("eval", "Evaluate the BSDF for one direction pair");
  auto material = std::make_shared<std::string>();
  auto wi = std::make_shared<std::vector<double>>();
  auto wo = std::make_shared<std::vector<double>>();
  auto params = std::make_shared<std::string>();
  auto single = std::make_shared<bool>(false);
  auto full = std::make_shared<bool>(false);
  auto lambert_t = std::make_shared<bool>(false);
  auto precision = std::make_shared<int>(6);
  cmd->add_option("material", *material, "Material file")->required();
  cmd->add_option("--wi", *wi, "Incident direction x y z")->expected(3)->required();
  cmd->add_option("--wo", *wo, "Outgoing direction x y z")->expected(3)->required();
  auto* s = cmd->add_flag("--single", *single, "Exact single scattering only (default)");
  cmd->add_flag("--full", *full, "Single scattering plus the added lobes")->excludes(s);
  cmd->add_option("--params", *params, "Fitted lobe parameters (JSON from `fit`)");
  cmd->add_flag("--lambert-transmission", *lambert_t, "Lambert lobe also covers transmission");
  cmd->add_option("--precision", *precision, "Decimal places")->check(CLI::Range(1, 17));
  cmd->callback([=, &g, &out] {
    const LayerStack stack = load_material(*material);
    const Vec3 i = direction(*wi, "--wi"), o = direction(*wo, "--wo");
    if (!*full) {
      print_spectrum(out, "value", eval_stack_single(stack, i, o), *precision);
      return;
    }
    const auto p = lobe_params(stack, g, *params);
    if (!p) throw CLI::ValidationError("--full", "needs --params or --weights");
    const LobeBreakdown b = ThreeLobeModel(stack, *p, {*lambert_t}).eval_lobes(i, o);
    print_spectrum(out, "value", b.total(), *precision);
    print_spectrum(out, "single", b.single, *precision);
    print_spectrum(out, "modified", b.modified, *precision);
    print_spectrum(out, "lambert", b.lambert, *precision);
  });
}

void add_lobe(CLI::App& app, Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("lobe", "Write a lobe image (PFM plus PNG preview)");
  struct Opts {
    std::string material, mode = "single", source = "analytic", layout = "fixed-incidence", output, params;
    double theta = 30.0;
    std::uint32_t rows = 64, cols = 128, res = 16;
    std::uint64_t spp = 100'000;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("material", o->material, "Material file")->required();
  cmd->add_option("--mode", o->mode, "single, multiple, full or full+delta");
  cmd->add_option("--source", o->source, "analytic or oracle")->check(CLI::IsMember({"analytic", "oracle"}));
  cmd->add_option("--layout", o->layout, "fixed-incidence or full-matrix")
      ->check(CLI::IsMember({"fixed-incidence", "full-matrix"}));
  cmd->add_option("--theta", o->theta, "Incident polar angle in degrees (fixed-incidence)");
  cmd->add_option("--rows", o->rows, "Image rows (fixed-incidence)");
  cmd->add_option("--cols", o->cols, "Image columns (fixed-incidence)");
  cmd->add_option("--res", o->res, "Table resolution per axis (full-matrix)");
  cmd->add_option("--spp", o->spp, "Oracle walks (per incident bin for full-matrix)");
  cmd->add_option("--params", o->params, "Fitted lobe parameters for analytic full/multiple");
  cmd->add_option("-o,--output", o->output, "Output .pfm path")->required();
  cmd->callback([=, &g, &out] {
    const LayerStack stack = load_material(o->material);
    const TransportMode mode = transport_mode_from_string(o->mode);
    if (o->rows < 1 || o->cols < 1 || o->res < 2) throw ParameterError("lobe resolution too small");
    const bool fixed = o->layout == "fixed-incidence";
    if (o->source == "oracle") {
      if (fixed) {
        write_outputs(fixed_incidence_oracle(stack, incidence(o->theta * kPi / 180.0), {o->rows, o->cols},
                                             o->spp, mode, g.seed, g.threads),
                      o->output, out);
      } else {
        TabulateOptions t;
        t.grid = {o->res, o->res};
        t.samples_per_wi = o->spp;
        t.mode = mode;
        t.seed = g.seed;
        t.threads = g.threads;
        write_outputs(full_matrix_image(tabulate(stack, t)), o->output, out);
      }
      return;
    }
    if (mode == TransportMode::full_delta)
      throw ParameterError("analytic lobes cannot show the delta term; use --source oracle");
    const CompiledStack compiled(stack);
    std::optional<ThreeLobeModel> model;
    if (mode != TransportMode::single_only) {
      const auto p = lobe_params(stack, g, o->params);
      if (!p) throw CLI::ValidationError("--mode", "analytic multiple/full lobes need --params or --weights");
      model.emplace(stack, *p);
    }
    DirectionalBsdf f = [&](const Vec3& a, const Vec3& b) -> Spectrum {
      if (mode == TransportMode::single_only) return compiled.eval_single(a, b);
      const LobeBreakdown l = model->eval_lobes(a, b);
      return mode == TransportMode::full ? l.total() : l.modified + l.lambert;
    };
    if (fixed)
      write_outputs(fixed_incidence_lobe(f, incidence(o->theta * kPi / 180.0), {o->rows, o->cols}, 4, g.threads),
                    o->output, out);
    else
      write_outputs(full_matrix_image(tabulate_analytic(f, {o->res, o->res}, mode, 4, g.threads)), o->output, out);
  });
}

void add_furnace(CLI::App& app, Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("furnace", "Directional albedo against incidence angle");
  struct Opts {
    std::string material, method = "analytic", params;
    std::uint32_t angles = 10;
    double max_angle = 81.0;
    std::uint64_t samples = 1'000'000;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("material", o->material, "Material file")->required();
  cmd->add_option("--method", o->method, "analytic (single + delta, plus added lobes if given) or mc")
      ->check(CLI::IsMember({"analytic", "mc"}));
  cmd->add_option("--angles", o->angles, "Number of incidence angles")->check(CLI::Range(1u, 1000u));
  cmd->add_option("--max-angle", o->max_angle, "Largest incidence angle in degrees")->check(CLI::Range(0.0, 89.9));
  cmd->add_option("--samples", o->samples, "Random walks per angle (mc)");
  cmd->add_option("--params", o->params, "Fitted lobe parameters (analytic)");
  cmd->callback([=, &g, &out] {
    const LayerStack stack = load_material(o->material);
    const CompiledStack compiled(stack);
    const auto params = o->method == "analytic" ? lobe_params(stack, g, o->params) : std::nullopt;
    std::optional<ThreeLobeModel> model;
    if (params) model.emplace(stack, *params);
    out << "# theta_deg albedo_r albedo_g albedo_b" << (o->method == "mc" ? " stderr_r stderr_g stderr_b" : "") << '\n';
    for (std::uint32_t k = 0; k < o->angles; ++k) {
      const double deg = o->angles == 1 ? 0.0 : o->max_angle * k / (o->angles - 1);
      const Vec3 wi = incidence(deg * kPi / 180.0);
      out << std::fixed << std::setprecision(2) << deg << std::setprecision(6);
      if (o->method == "mc") {
        const auto e = furnace_albedo(stack, wi, o->samples, TransportMode::full_delta, mix_seed(g.seed, k),
                                      100000, g.threads);
        out << ' ' << e.mean.r << ' ' << e.mean.g << ' ' << e.mean.b << ' ' << e.std_error.r << ' '
            << e.std_error.g << ' ' << e.std_error.b << '\n';
        continue;
      }
      const QuadratureOptions q{512, 512, g.threads};
      Spectrum a = model ? integrate_projected([&](const Vec3& x, const Vec3& y) { return model->eval(x, y); }, wi, q)
                         : single_scatter_albedo(compiled, wi, false, q);
      if (stack.include_delta) a += compiled.delta_transmittance(wi);
      out << ' ' << a.r << ' ' << a.g << ' ' << a.b << '\n';
    }
  });
}

void add_dataset(CLI::App& app, Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("dataset", "Generate multiple-scattering tables and a manifest");
  auto o = std::make_shared<DatasetOptions>();
  auto dir = std::make_shared<std::string>();
  cmd->add_option("--count", o->count, "Number of configurations");
  cmd->add_option("--layers", o->layers, "Layers per configuration")->check(CLI::Range(1u, 8u));
  cmd->add_option("--res", o->resolution, "Grid resolution per axis")->check(CLI::Range(2u, 4096u));
  cmd->add_option("--spp", o->samples_per_wi, "Walks per incident bin");
  cmd->add_option("-o,--output", *dir, "Output directory")->required();
  cmd->callback([=, &g, &out] {
    DatasetOptions opts = *o;
    opts.seed = g.seed;
    opts.threads = g.threads;
    const auto entries = write_dataset(opts, *dir);
    out << "wrote " << entries.size() << " tables and manifest.json to " << *dir << '\n';
  });
}

void add_fit(CLI::App& app, Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("fit", "Fit the added lobes to a multiple-scattering table");
  struct Opts {
    std::string material, table, output;
    std::uint32_t res = 8;
    std::uint64_t spp = 20'000;
    int budget = 1500;
    bool lambert_t = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("material", o->material, "Material file")->required();
  cmd->add_option("--table", o->table, "Existing multiple-only table (.sptb); otherwise one is traced");
  cmd->add_option("--res", o->res, "Resolution of the traced table")->check(CLI::Range(2u, 4096u));
  cmd->add_option("--spp", o->spp, "Walks per incident bin of the traced table");
  cmd->add_option("--budget", o->budget, "Maximum loss evaluations")->check(CLI::PositiveNumber);
  cmd->add_flag("--lambert-transmission", o->lambert_t, "Lambert lobe also covers transmission");
  cmd->add_option("-o,--output", o->output, "Output JSON path")->required();
  cmd->callback([=, &g, &out] {
    const LayerStack stack = load_material(o->material);
    BsdfTable target;
    if (!o->table.empty()) {
      target = load_table(o->table);
      if (target.mode != TransportMode::multiple_only)
        throw ParameterError("fit needs a multiple-only table, got " + std::string(to_string(target.mode)));
    } else {
      TabulateOptions t;
      t.grid = {o->res, o->res};
      t.samples_per_wi = o->spp;
      t.mode = TransportMode::multiple_only;
      t.seed = g.seed;
      t.threads = g.threads;
      target = tabulate(stack, t);
    }
    FitOptions f;
    f.max_evaluations = o->budget;
    f.lobes.lambert_transmission = o->lambert_t;
    const FitResult r = fit_direct(stack, target, f);
    save_params(r, o->output);
    out << std::setprecision(6) << "baseline_mae " << r.baseline_mae << "\nfitted_mae " << r.mae
        << "\nw1 " << r.params.w1 << "\nw2 " << r.params.w2 << "\nconverged " << (r.converged ? "yes" : "no")
        << "\nevaluations " << r.evaluations << '\n';
    if (!r.converged) out << "warning: evaluation budget exhausted, parameters are the best found\n";
  });
}

void add_sample_test(CLI::App& app, Globals& g, std::ostream& out, int& status) {
  auto* cmd = app.add_subcommand("sample-test", "Chi-square test of the importance sampler");
  auto material = std::make_shared<std::string>();
  auto theta = std::make_shared<double>(30.0);
  auto o = std::make_shared<SampleTestOptions>();
  cmd->add_option("material", *material, "Material file")->required();
  cmd->add_option("--theta", *theta, "Incident polar angle in degrees")->check(CLI::Range(0.0, 89.9));
  cmd->add_option("--samples", o->samples, "Number of samples")->check(CLI::PositiveNumber);
  cmd->add_option("--significance", o->significance, "Test level")->check(CLI::Range(0.0, 1.0));
  cmd->callback([=, &g, &out, &status] {
    SampleTestOptions opts = *o;
    opts.seed = g.seed;
    const SampleTestResult r = run_sample_test(load_material(*material), incidence(*theta * kPi / 180.0), opts);
    out << std::setprecision(6) << "chi2 " << r.statistic << "\ndof " << r.dof << "\np_value " << r.p_value << '\n';
    print_spectrum(out, "albedo_estimate", r.albedo_estimate, 6);
    print_spectrum(out, "albedo_quadrature", r.albedo_quadrature, 6);
    out << (r.passed ? "PASS" : "FAIL") << '\n';
    if (!r.passed) status = kExitNumerical;
  });
}

void add_render(CLI::App& app, Globals& g, std::ostream& out) {
  auto* cmd = app.add_subcommand("render", "Direct-lighting render of the material on a sphere");
  struct Opts {
    std::string material, strategy = "mis", output, variance, params;
    RenderOptions render;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("material", o->material, "Material file")->required();
  cmd->add_option("--strategy", o->strategy, "bsdf, light or mis")->check(CLI::IsMember({"bsdf", "light", "mis"}));
  cmd->add_option("--spp", o->render.spp, "Samples per pixel")->check(CLI::PositiveNumber);
  cmd->add_option("--width", o->render.width, "Image width")->check(CLI::Range(1u, 8192u));
  cmd->add_option("--height", o->render.height, "Image height")->check(CLI::Range(1u, 8192u));
  cmd->add_option("--params", o->params, "Fitted lobe parameters");
  cmd->add_option("--variance", o->variance, "Also write per-pixel variance as .pfm");
  cmd->add_option("-o,--output", o->output, "Output .pfm path")->required();
  cmd->callback([=, &g, &out] {
    const LayerStack stack = load_material(o->material);
    RenderOptions r = o->render;
    r.strategy = strategy_from_string(o->strategy);
    r.seed = g.seed;
    r.threads = g.threads;
    const RenderResult res = render(stack, lobe_params(stack, g, o->params), r);
    write_outputs(res.radiance, o->output, out);
    if (!o->variance.empty()) {
      Image v(res.radiance.width, res.radiance.height);
      for (std::size_t k = 0; k < res.variance.size(); ++k)
        for (int c = 0; c < 3; ++c) v.rgb[k * 3 + c] = static_cast<float>(res.variance[k]);
      write_pfm(v, o->variance);
    }
    out << std::scientific << std::setprecision(6) << "mean_variance " << res.mean_variance() << '\n';
  });
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Layered microflake BSDF tools"};
  app.require_subcommand(1);
  Globals g;
  int status = kExitOk;
  app.add_option("--seed", g.seed, "Random seed")->check(CLI::NonNegativeNumber);
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--weights", g.weights, "Network weight file for the added lobes");
  add_eval(app, g, out);
  add_lobe(app, g, out);
  add_furnace(app, g, out);
  add_dataset(app, g, out);
  add_fit(app, g, out);
  add_sample_test(app, g, out, status);
  add_render(app, g, out);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    // Numerical trouble: non-finite results, grazing or degenerate directions.
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return status;
}

}  // namespace spongecake::tools
