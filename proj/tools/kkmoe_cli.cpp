#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kkmoe/csv.hpp"
#include "kkmoe/kk.hpp"
#include "kkmoe/lorentz.hpp"
#include "kkmoe/pipeline.hpp"
#include "kkmoe/sampler.hpp"
#include "kkmoe/spectrum.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "kkmoe 0.1.0";

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

struct EstimateConfig {
    std::string input;
    std::string units = "ev_kappa";
    double thickness_cm = 0.0;
    int K = 5;
    kkmoe::inference::SamplerConfig sampler;
    std::size_t grid_points = 2048;
    double extension_low = 0.5;
    double extension_high = 0.5;
    bool extrapolation = true;
    kkmoe::AnchorDistribution anchor;
    bool anchor_given = false;
    std::size_t n_realizations = 500;
    std::string output_dir = ".";
    std::optional<std::uint64_t> seed;
    std::vector<std::pair<double, double>> background_windows;
    double background_floor = 1e-8;
    bool write_realizations = false;
};

void apply_json(EstimateConfig& cfg, const json& doc) {
    if (doc.contains("input")) cfg.input = doc["input"].get<std::string>();
    if (doc.contains("units")) cfg.units = doc["units"].get<std::string>();
    if (doc.contains("thickness_cm")) cfg.thickness_cm = doc["thickness_cm"].get<double>();
    if (doc.contains("K")) cfg.K = doc["K"].get<int>();
    if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("output_dir")) cfg.output_dir = doc["output_dir"].get<std::string>();
    if (doc.contains("n_realizations")) cfg.n_realizations = doc["n_realizations"].get<std::size_t>();
    if (doc.contains("write_realizations")) cfg.write_realizations = doc["write_realizations"].get<bool>();
    if (doc.contains("sampler")) {
        const auto& s = doc["sampler"];
        if (s.contains("chains")) cfg.sampler.n_chains = s["chains"].get<int>();
        if (s.contains("iterations")) cfg.sampler.n_iterations = s["iterations"].get<int>();
        if (s.contains("burn_in")) cfg.sampler.n_burn_in = s["burn_in"].get<int>();
        if (s.contains("thinning")) cfg.sampler.thinning = s["thinning"].get<int>();
        if (s.contains("allocation_fraction"))
            cfg.sampler.allocation_update_fraction = s["allocation_fraction"].get<double>();
        if (s.contains("step_expert")) cfg.sampler.steps.expert_log = s["step_expert"].get<double>();
        if (s.contains("step_gating_mean"))
            cfg.sampler.steps.gating_mean = s["step_gating_mean"].get<double>();
        if (s.contains("step_gating_width"))
            cfg.sampler.steps.gating_log_width = s["step_gating_width"].get<double>();
        if (s.contains("step_gating_weight"))
            cfg.sampler.steps.gating_weight = s["step_gating_weight"].get<double>();
    }
    if (doc.contains("grid")) {
        const auto& g = doc["grid"];
        if (g.contains("n_points")) cfg.grid_points = g["n_points"].get<std::size_t>();
        if (g.contains("extension_low")) cfg.extension_low = g["extension_low"].get<double>();
        if (g.contains("extension_high")) cfg.extension_high = g["extension_high"].get<double>();
        if (g.contains("extrapolation")) cfg.extrapolation = g["extrapolation"].get<bool>();
    }
    if (doc.contains("anchor")) {
        const auto& a = doc["anchor"];
        if (a.contains("omega_mean")) cfg.anchor.omega_mean = a["omega_mean"].get<double>();
        if (a.contains("omega_std")) cfg.anchor.omega_std = a["omega_std"].get<double>();
        if (a.contains("eta_mean")) cfg.anchor.eta_mean = a["eta_mean"].get<double>();
        if (a.contains("eta_std")) cfg.anchor.eta_std = a["eta_std"].get<double>();
        if (a.contains("fixed")) cfg.anchor.fixed = a["fixed"].get<bool>();
        cfg.anchor_given = true;
    }
    if (doc.contains("background")) {
        const auto& b = doc["background"];
        if (b.contains("floor")) cfg.background_floor = b["floor"].get<double>();
        if (b.contains("windows")) {
            for (const auto& w : b["windows"])
                cfg.background_windows.emplace_back(w[0].get<double>(), w[1].get<double>());
        }
    }
}

json config_echo(const EstimateConfig& cfg) {
    json doc;
    doc["input"] = cfg.input;
    doc["units"] = cfg.units;
    if (cfg.thickness_cm > 0.0) doc["thickness_cm"] = cfg.thickness_cm;
    doc["K"] = cfg.K;
    doc["seed"] = *cfg.seed;
    doc["output_dir"] = cfg.output_dir;
    doc["n_realizations"] = cfg.n_realizations;
    doc["write_realizations"] = cfg.write_realizations;
    doc["sampler"] = {{"chains", cfg.sampler.n_chains},
                      {"iterations", cfg.sampler.n_iterations},
                      {"burn_in", cfg.sampler.n_burn_in},
                      {"thinning", cfg.sampler.thinning},
                      {"allocation_fraction", cfg.sampler.allocation_update_fraction},
                      {"step_expert", cfg.sampler.steps.expert_log},
                      {"step_gating_mean", cfg.sampler.steps.gating_mean},
                      {"step_gating_width", cfg.sampler.steps.gating_log_width},
                      {"step_gating_weight", cfg.sampler.steps.gating_weight}};
    doc["grid"] = {{"n_points", cfg.grid_points},
                   {"extension_low", cfg.extension_low},
                   {"extension_high", cfg.extension_high},
                   {"extrapolation", cfg.extrapolation}};
    doc["anchor"] = {{"omega_mean", cfg.anchor.omega_mean},
                     {"omega_std", cfg.anchor.omega_std},
                     {"eta_mean", cfg.anchor.eta_mean},
                     {"eta_std", cfg.anchor.eta_std},
                     {"fixed", cfg.anchor.fixed}};
    if (!cfg.background_windows.empty()) {
        json windows = json::array();
        for (const auto& [a, b] : cfg.background_windows) windows.push_back({a, b});
        doc["background"] = {{"windows", windows}, {"floor", cfg.background_floor}};
    }
    return doc;
}

int cmd_estimate(EstimateConfig cfg) {
    const std::vector<std::string> outputs = {"kappa_summary.csv", "eta_summary.csv",
                                              "manifest.json", "realizations.csv"};
    auto cleanup = [&] {
        for (const auto& name : outputs) {
            std::error_code ec;
            fs::remove(fs::path(cfg.output_dir) / name, ec);
        }
    };
    try {
        if (!cfg.anchor_given)
            throw kkmoe::ConfigurationError(
                "an anchor (--anchor-omega/--anchor-eta or config \"anchor\") is required");
        if (!cfg.seed) {
            std::random_device rd;
            cfg.seed = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
        }
        cfg.sampler.rng_seed = *cfg.seed;
        fs::create_directories(cfg.output_dir);

        json timings;
        auto t0 = std::chrono::steady_clock::now();
        kkmoe::AttenuationSpectrum spectrum = kkmoe::load_spectrum(
            cfg.input, kkmoe::parse_source_units(cfg.units), cfg.thickness_cm);
        if (!cfg.background_windows.empty())
            spectrum = kkmoe::remove_background(spectrum, cfg.background_windows,
                                                cfg.background_floor);
        timings["load_ms"] = elapsed_ms(t0);

        const auto prior = kkmoe::moe::PriorSpec::from_data(spectrum, cfg.K);
        const auto data = kkmoe::moe::LogData::from_spectrum(spectrum);

        t0 = std::chrono::steady_clock::now();
        const auto ensemble = kkmoe::inference::run_sampler(data, prior, cfg.sampler);
        timings["sampler_ms"] = elapsed_ms(t0);

        const double ext_lo = cfg.extrapolation ? cfg.extension_low : 0.0;
        const double ext_hi = cfg.extrapolation ? cfg.extension_high : 0.0;
        const auto grid =
            kkmoe::pipeline::build_prediction_grid(spectrum, ext_lo, ext_hi, cfg.grid_points);

        t0 = std::chrono::steady_clock::now();
        const auto result = kkmoe::pipeline::run_algorithm1(
            ensemble, data, grid, cfg.anchor, cfg.n_realizations,
            kkmoe::inference::derive_seed(*cfg.seed, 0xA160));
        timings["pipeline_ms"] = elapsed_ms(t0);

        const fs::path out_dir(cfg.output_dir);
        kkmoe::write_csv((out_dir / "kappa_summary.csv").string(),
                         {"omega_ev", "kappa_mean", "kappa_q025", "kappa_q975"},
                         {grid.omega, result.kappa_summary.mean, result.kappa_summary.lower,
                          result.kappa_summary.upper});
        kkmoe::write_csv((out_dir / "eta_summary.csv").string(),
                         {"omega_ev", "eta_mean", "eta_q025", "eta_q975"},
                         {grid.omega, result.eta_summary.mean, result.eta_summary.lower,
                          result.eta_summary.upper});
        if (cfg.write_realizations) {
            std::vector<std::string> header = {"omega_ev"};
            std::vector<std::vector<double>> columns = {grid.omega};
            for (std::size_t r = 0; r < result.kappa.rows.size(); ++r) {
                header.push_back("kappa_r" + std::to_string(r));
                columns.push_back(result.kappa.rows[r]);
            }
            kkmoe::write_csv((out_dir / "realizations.csv").string(), header, columns);
        }

        json manifest;
        manifest["version"] = kVersion;
        manifest["config"] = config_echo(cfg);
        manifest["seed"] = *cfg.seed;
        manifest["n_data_points"] = spectrum.size();
        manifest["n_posterior_samples"] = ensemble.samples.size();
        manifest["n_realizations_kept"] = result.kappa.rows.size();
        manifest["failed_realizations"] = result.failed_realizations;
        manifest["anchor_snap_mean_ev"] = result.mean_anchor_snap;
        manifest["anchor_snap_max_ev"] = result.max_anchor_snap;
        manifest["timings"] = timings;
        manifest["diagnostics"] = json::parse(ensemble.diagnostics_json());
        std::ofstream mout(out_dir / "manifest.json");
        mout << manifest.dump(2) << '\n';
        if (!mout) throw kkmoe::ConfigurationError("cannot write manifest.json");
        return 0;
    } catch (const std::exception& e) {
        cleanup();
        std::cerr << "estimate: error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_synth(const std::vector<double>& resonance_flat, double eps_inf, double grid_min,
              double grid_max, std::size_t grid_n, double noise, std::uint64_t seed,
              const std::string& out_path, const std::string& truth_path) {
    try {
        if (resonance_flat.size() % 3 != 0 || resonance_flat.empty())
            throw kkmoe::ConfigurationError("--resonance expects wp2,w0,gamma triples");
        kkmoe::synth::LorentzModel model;
        model.eps_inf = eps_inf;
        for (std::size_t i = 0; i < resonance_flat.size(); i += 3)
            model.resonances.push_back(
                {resonance_flat[i], resonance_flat[i + 1], resonance_flat[i + 2]});
        model.validate();
        if (!(grid_min > 0.0) || !(grid_max > grid_min) || grid_n < 4)
            throw kkmoe::ConfigurationError("invalid synthetic grid");

        std::vector<double> omega(grid_n);
        const double h = (grid_max - grid_min) / static_cast<double>(grid_n - 1);
        for (std::size_t i = 0; i < grid_n; ++i)
            omega[i] = (i + 1 == grid_n) ? grid_max : grid_min + h * static_cast<double>(i);
        kkmoe::FrequencyGrid grid(omega, h);

        const auto spectrum = kkmoe::synth::generate_spectrum(model, grid, noise, seed);
        kkmoe::save_spectrum(out_path, spectrum);

        if (!truth_path.empty()) {
            std::vector<double> eta(grid_n), kappa(grid_n);
            for (std::size_t i = 0; i < grid_n; ++i) {
                const auto [e, k] = kkmoe::synth::lorentz_n(model, omega[i]);
                eta[i] = e;
                kappa[i] = k;
            }
            kkmoe::write_csv(truth_path, {"omega_ev", "eta", "kappa"}, {omega, eta, kappa});
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "synth: error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_kk(const std::string& input, const std::string& units, double thickness_cm,
           std::size_t resample_n, std::optional<double> anchor_omega,
           std::optional<double> anchor_eta, const std::string& out_path) {
    try {
        auto spectrum =
            kkmoe::load_spectrum(input, kkmoe::parse_source_units(units), thickness_cm);
        if (!spectrum.grid().uniform_spacing() || resample_n > 0)
            spectrum = kkmoe::resample_uniform(spectrum,
                                               resample_n > 0 ? resample_n : spectrum.size());
        kkmoe::kk::PVGrid pv(spectrum.grid().values(), spectrum.kappa());

        kkmoe::kk::KKResult result;
        if (anchor_omega && anchor_eta) {
            result = kkmoe::kk::sskk_eta(pv, {*anchor_omega, *anchor_eta},
                                         spectrum.grid().values());
        } else if (!anchor_omega && !anchor_eta) {
            result = kkmoe::kk::kk_eta(pv, spectrum.grid().values());
        } else {
            throw kkmoe::ConfigurationError("--anchor-omega and --anchor-eta go together");
        }
        kkmoe::write_csv(out_path, {"omega_ev", "eta"}, {result.omega, result.eta});
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "kk: error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Complex refractive index estimation from attenuation spectra"};
    app.require_subcommand(1);

    // estimate
    EstimateConfig cfg;
    std::string config_path;
    auto* estimate = app.add_subcommand(
        "estimate", "Posterior estimation of eta and kappa from a measured spectrum");
    estimate->add_option("--config", config_path, "JSON config file; flags override it");
    auto* in_opt = estimate->add_option("--input", cfg.input, "spectrum CSV");
    estimate->add_option("--units", cfg.units, "ev_kappa|nm_kappa|nm_absorbance");
    estimate->add_option("--thickness-cm", cfg.thickness_cm, "sample thickness for absorbance");
    auto* k_opt = estimate->add_option("-K,--experts", cfg.K, "number of experts");
    auto* seed_opt = estimate->add_option("--seed", [&cfg](const std::vector<std::string>& v) {
        cfg.seed = std::stoull(v.front());
        return true;
    }, "rng seed (recorded in the manifest)");
    auto* out_opt = estimate->add_option("--output-dir", cfg.output_dir, "output directory");
    auto* nreal_opt =
        estimate->add_option("--realizations", cfg.n_realizations, "Monte Carlo realizations");
    auto* it_opt = estimate->add_option("--iterations", cfg.sampler.n_iterations, "");
    auto* burn_opt = estimate->add_option("--burn-in", cfg.sampler.n_burn_in, "");
    auto* thin_opt = estimate->add_option("--thinning", cfg.sampler.thinning, "");
    auto* chains_opt = estimate->add_option("--chains", cfg.sampler.n_chains, "");
    auto* gridn_opt = estimate->add_option("--grid-points", cfg.grid_points, "");
    auto* extlo_opt = estimate->add_option("--extension-low", cfg.extension_low, "");
    auto* exthi_opt = estimate->add_option("--extension-high", cfg.extension_high, "");
    bool no_extrapolation = false;
    auto* noext_opt = estimate->add_flag("--no-extrapolation", no_extrapolation,
                                         "restrict the prediction grid to the measurement range");
    auto* aw_opt = estimate->add_option("--anchor-omega", cfg.anchor.omega_mean, "anchor mean (eV)");
    auto* ae_opt = estimate->add_option("--anchor-eta", cfg.anchor.eta_mean, "anchor eta mean");
    auto* aws_opt = estimate->add_option("--anchor-omega-std", cfg.anchor.omega_std, "");
    auto* aes_opt = estimate->add_option("--anchor-eta-std", cfg.anchor.eta_std, "");
    bool anchor_fixed = false;
    auto* af_opt = estimate->add_flag("--anchor-fixed", anchor_fixed, "use the anchor means exactly");
    estimate->add_flag("--write-realizations", cfg.write_realizations, "");

    // synth
    std::vector<double> resonances;
    double eps_inf = 1.0, synth_min = 0.1, synth_max = 10.0, synth_noise = 0.0;
    std::size_t synth_n = 256;
    std::uint64_t synth_seed = 1;
    std::string synth_out = "spectrum.csv", synth_truth;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic Lorentz-oscillator spectrum");
    synth->add_option("--resonance", resonances, "wp2 w0 gamma (repeatable triple)")->expected(-3);
    synth->add_option("--eps-inf", eps_inf, "");
    synth->add_option("--grid-min", synth_min, "eV");
    synth->add_option("--grid-max", synth_max, "eV");
    synth->add_option("--grid-points", synth_n, "");
    synth->add_option("--noise", synth_noise, "log-domain noise std");
    synth->add_option("--seed", synth_seed, "");
    synth->add_option("--output", synth_out, "");
    synth->add_option("--truth", synth_truth, "optional noise-free (eta, kappa) CSV");

    // kk
    std::string kk_input, kk_units = "ev_kappa", kk_out = "eta.csv";
    double kk_thickness = 0.0;
    std::size_t kk_resample = 0;
    double kk_anchor_omega = 0.0, kk_anchor_eta = 0.0;
    auto* kkcmd = app.add_subcommand("kk", "Direct (SS)KK transform of a kappa spectrum");
    kkcmd->add_option("--input", kk_input, "")->required();
    kkcmd->add_option("--units", kk_units, "");
    kkcmd->add_option("--thickness-cm", kk_thickness, "");
    kkcmd->add_option("--resample", kk_resample, "resample to a uniform grid of this size");
    auto* kaw = kkcmd->add_option("--anchor-omega", kk_anchor_omega, "");
    auto* kae = kkcmd->add_option("--anchor-eta", kk_anchor_eta, "");
    kkcmd->add_option("--output", kk_out, "");

    CLI11_PARSE(app, argc, argv);

    if (estimate->parsed()) {
        EstimateConfig merged; // file values first, then flag overrides
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            if (!in) {
                std::cerr << "estimate: error: cannot open config " << config_path << '\n';
                return 1;
            }
            try {
                apply_json(merged, json::parse(in));
            } catch (const std::exception& e) {
                std::cerr << "estimate: error: bad config: " << e.what() << '\n';
                return 1;
            }
        }
        if (*in_opt) merged.input = cfg.input;
        if (estimate->count("--units")) merged.units = cfg.units;
        if (estimate->count("--thickness-cm")) merged.thickness_cm = cfg.thickness_cm;
        if (*k_opt) merged.K = cfg.K;
        if (*seed_opt) merged.seed = cfg.seed;
        if (*out_opt) merged.output_dir = cfg.output_dir;
        if (*nreal_opt) merged.n_realizations = cfg.n_realizations;
        if (*it_opt) merged.sampler.n_iterations = cfg.sampler.n_iterations;
        if (*burn_opt) merged.sampler.n_burn_in = cfg.sampler.n_burn_in;
        if (*thin_opt) merged.sampler.thinning = cfg.sampler.thinning;
        if (*chains_opt) merged.sampler.n_chains = cfg.sampler.n_chains;
        if (*gridn_opt) merged.grid_points = cfg.grid_points;
        if (*extlo_opt) merged.extension_low = cfg.extension_low;
        if (*exthi_opt) merged.extension_high = cfg.extension_high;
        if (*aw_opt) merged.anchor.omega_mean = cfg.anchor.omega_mean;
        if (*ae_opt) merged.anchor.eta_mean = cfg.anchor.eta_mean;
        if (*aws_opt) merged.anchor.omega_std = cfg.anchor.omega_std;
        if (*aes_opt) merged.anchor.eta_std = cfg.anchor.eta_std;
        if (*aw_opt || *ae_opt) merged.anchor_given = true;
        if (*noext_opt) merged.extrapolation = !no_extrapolation;
        if (*af_opt) merged.anchor.fixed = anchor_fixed;
        if (estimate->count("--write-realizations")) merged.write_realizations = true;
        return cmd_estimate(std::move(merged));
    }
    if (synth->parsed())
        return cmd_synth(resonances, eps_inf, synth_min, synth_max, synth_n, synth_noise,
                         synth_seed, synth_out, synth_truth);
    if (kkcmd->parsed()) {
        std::optional<double> aw, ae;
        if (*kaw) aw = kk_anchor_omega;
        if (*kae) ae = kk_anchor_eta;
        return cmd_kk(kk_input, kk_units, kk_thickness, kk_resample, aw, ae, kk_out);
    }
    return 1;
}
