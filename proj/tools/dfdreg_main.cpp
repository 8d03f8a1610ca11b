// Command-line front end for the filtered-decomposition tomography library.
//
// Subcommands: phantom, project, noise, fbp, train, reconstruct,
// verify-filter, mse-table, convergence.  Every subcommand accepts --seed,
// --out and --config <json>; values from the JSON config act as defaults
// that explicit command-line flags override.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or file-format error.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "dfdreg/core.hpp"
#include "dfdreg/dfd.hpp"
#include "dfdreg/experiment.hpp"
#include "dfdreg/filters.hpp"
#include "dfdreg/haar.hpp"
#include "dfdreg/io.hpp"
#include "dfdreg/learned.hpp"
#include "dfdreg/neighbour.hpp"
#include "dfdreg/noise.hpp"
#include "dfdreg/phantom.hpp"
#include "dfdreg/radon.hpp"
#include "dfdreg/reconstruct.hpp"
#include "dfdreg/train.hpp"
#include "dfdreg/verify.hpp"

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::vector<double> parse_double_list(const std::string& csv, const char* flag) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                out.push_back(v);
            } catch (const std::exception&) {
                throw UsageError(std::string(flag) + ": bad number '" + tok + "'");
            }
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw UsageError(std::string(flag) + ": empty list");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& csv) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string tok =
            csv.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) out.push_back(tok);
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<dfdreg::Image> load_image_dir(const std::string& dir) {
    std::vector<std::string> paths;
    if (!fs::is_directory(dir))
        throw UsageError("--images: not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".fflt")
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) throw UsageError("--images: no .fflt files in " + dir);
    std::vector<dfdreg::Image> images;
    images.reserve(paths.size());
    for (const std::string& p : paths) images.push_back(dfdreg::read_image(p));
    return images;
}

dfdreg::RadonGeometry geometry_for(std::size_t size, std::size_t n_angles,
                                   std::size_t n_offsets,
                                   const std::string& range) {
    if (n_angles == 0) n_angles = 2 * size;
    if (n_offsets == 0) n_offsets = dfdreg::default_n_offsets(size);
    return dfdreg::make_calibrated_geometry(size, n_angles, n_offsets,
                                            dfdreg::angle_range_from_string(range));
}

dfdreg::Filter make_named_filter(const std::string& name,
                                 const std::string& params_path) {
    if (!params_path.empty()) {
        auto params = std::make_shared<dfdreg::MonotoneFilterParams>(
            dfdreg::load_params(params_path));
        return dfdreg::Filter::learned(std::move(params));
    }
    switch (dfdreg::filter_kind_from_string(name)) {
        case dfdreg::FilterKind::identity: return dfdreg::Filter::identity();
        case dfdreg::FilterKind::example_cubic: return dfdreg::Filter::example_cubic();
        case dfdreg::FilterKind::soft_threshold: return dfdreg::Filter::soft_threshold();
        case dfdreg::FilterKind::linear_tikhonov: return dfdreg::Filter::linear_tikhonov();
        case dfdreg::FilterKind::learned:
            throw UsageError("--filter learned requires --params <file>");
    }
    throw UsageError("unknown filter: " + name);
}

// Merge a --config JSON object into the token stream: config-derived tokens
// are inserted directly after the subcommand name so that explicit
// command-line flags (parsed later, TakeLast policy) override them.
std::vector<std::string> apply_config(std::vector<std::string> args) {
    std::size_t config_at = args.size();
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) {
            config_at = i;
            config_path = args[i + 1];
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                       args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
            break;
        }
        if (args[i].rfind("--config=", 0) == 0) {
            config_at = i;
            config_path = args[i].substr(9);
            args.erase(args.begin() + static_cast<std::ptrdiff_t>(i));
            break;
        }
    }
    if (config_path.empty()) return args;
    if (config_at == 0 || args.empty())
        throw UsageError("--config must follow a subcommand");

    const nlohmann::json j = dfdreg::read_json(config_path);
    if (!j.is_object()) throw UsageError("--config: top-level JSON object required");
    std::vector<std::string> extra;
    for (auto it = j.begin(); it != j.end(); ++it) {
        extra.push_back("--" + it.key());
        const nlohmann::json& v = it.value();
        if (v.is_string()) {
            extra.push_back(v.get<std::string>());
        } else if (v.is_number_integer()) {
            extra.push_back(std::to_string(v.get<long long>()));
        } else if (v.is_number()) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v.get<double>());
            extra.push_back(buf);
        } else if (v.is_boolean()) {
            extra.push_back(v.get<bool>() ? "true" : "false");
        } else {
            throw UsageError("--config: unsupported value for key '" + it.key() + "'");
        }
    }
    // Insert after the subcommand token (the first non-option token).
    std::size_t sub = 0;
    while (sub < args.size() && !args[sub].empty() && args[sub][0] == '-') ++sub;
    if (sub == args.size()) throw UsageError("--config must follow a subcommand");
    args.insert(args.begin() + static_cast<std::ptrdiff_t>(sub) + 1, extra.begin(),
                extra.end());
    return args;
}

std::vector<double> symmetric_grid(double xmax, std::size_t n) {
    if (xmax <= 0.0) throw UsageError("--xmax must be positive");
    if (n < 5) throw UsageError("--probes must be at least 5");
    if (n % 2 == 0) ++n;  // an exact zero node is required
    const std::size_t half = n / 2;
    std::vector<double> x(n, 0.0);
    for (std::size_t j = 1; j <= half; ++j) {
        const double v = xmax * static_cast<double>(j) / static_cast<double>(half);
        x[half + j] = v;
        x[half - j] = -v;
    }
    return x;
}

}  // namespace

int main(int argc, char** argv) {
    using namespace dfdreg;

    CLI::App app{"Filtered diagonal-frame regularization for 2-D tomography"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    // ---- phantom ----------------------------------------------------------
    struct {
        std::string kind = "shepp_logan";
        std::size_t size = 256;
        std::uint64_t seed = 0;
        std::string out;
    } ph;
    CLI::App* c_ph = app.add_subcommand("phantom", "Generate a test image");
    c_ph->add_option("--kind", ph.kind, "shepp_logan|disks|checker|random");
    c_ph->add_option("--size", ph.size, "image side length (power of two for DFD use)");
    c_ph->add_option("--seed", ph.seed, "seed for --kind random");
    c_ph->add_option("--out", ph.out, "output image (.fflt or .pgm)")->required();
    c_ph->callback([&] {
        Image img = [&] {
            if (ph.kind == "random") {
                Rng rng{RngSeed{ph.seed}};
                return random_phantom(ph.size, rng);
            }
            return make_phantom(phantom_kind_from_string(ph.kind), ph.size);
        }();
        write_image(img, ph.out);
    });

    // ---- project ----------------------------------------------------------
    struct {
        std::string image;
        std::size_t angles = 0;
        std::size_t offsets = 0;
        std::string range = "half_turn";
        std::uint64_t seed = 0;
        std::string out;
    } pr;
    CLI::App* c_pr = app.add_subcommand("project", "Forward projection (Radon transform)");
    c_pr->add_option("--image", pr.image, "input image (.fflt)")->required();
    c_pr->add_option("--angles", pr.angles, "number of angles (default 2*size)");
    c_pr->add_option("--offsets", pr.offsets, "number of offsets (default ~size*sqrt(2), odd)");
    c_pr->add_option("--range", pr.range, "half_turn|full_turn");
    c_pr->add_option("--seed", pr.seed, "unused; accepted for uniformity");
    c_pr->add_option("--out", pr.out, "output sinogram (.fsin)")->required();
    c_pr->callback([&] {
        const Image img = read_image(pr.image);
        const RadonGeometry g = geometry_for(img.size(), pr.angles, pr.offsets, pr.range);
        write_sinogram(radon_forward(img, g), pr.out);
    });

    // ---- noise ------------------------------------------------------------
    struct {
        std::string sinogram;
        std::string kind = "gaussian";
        double delta = 8.0;
        std::uint64_t seed = 0;
        std::string out;
    } no;
    CLI::App* c_no = app.add_subcommand("noise", "Add calibrated noise to a sinogram");
    c_no->add_option("--sinogram", no.sinogram, "input sinogram (.fsin)")->required();
    c_no->add_option("--kind", no.kind, "gaussian|poisson|uniform|salt_pepper");
    c_no->add_option("--delta", no.delta, "target RMS noise level");
    c_no->add_option("--seed", no.seed, "noise seed");
    c_no->add_option("--out", no.out, "output sinogram (.fsin)")->required();
    c_no->callback([&] {
        const Sinogram y = read_sinogram(no.sinogram);
        NoiseSpec spec;
        spec.kind = noise_kind_from_string(no.kind);
        spec.target_delta = no.delta;
        spec.seed = RngSeed{no.seed};
        write_sinogram(add_noise(y, spec), no.out);
    });

    // ---- fbp --------------------------------------------------------------
    struct {
        std::string sinogram;
        std::size_t size = 0;
        std::uint64_t seed = 0;
        std::string out;
    } fb;
    CLI::App* c_fb = app.add_subcommand("fbp", "Filtered backprojection inversion");
    c_fb->add_option("--sinogram", fb.sinogram, "input sinogram (.fsin)")->required();
    c_fb->add_option("--size", fb.size, "output image side length")->required();
    c_fb->add_option("--seed", fb.seed, "unused; accepted for uniformity");
    c_fb->add_option("--out", fb.out, "output image (.fflt or .pgm)")->required();
    c_fb->callback([&] {
        const Sinogram y = read_sinogram(fb.sinogram);
        const RadonGeometry g = make_calibrated_geometry(fb.size, y.n_angles(),
                                                         y.n_offsets(), y.angle_range());
        write_image(fbp(y, g), fb.out);
    });

    // ---- train ------------------------------------------------------------
    struct {
        std::string images;
        double delta = 8.0;
        std::string noise = "gaussian";
        std::size_t train_count = 0;
        std::size_t val_count = 0;
        std::size_t epochs = 60;
        double lr = 1.0;
        double lr_decay = 1.0;
        std::size_t knots = 63;
        double range = 0.0;
        int levels = 4;
        std::size_t angles = 0;
        std::size_t offsets = 0;
        double kappa0 = 1.0;
        std::uint64_t seed = 0;
        std::string out;
    } tr;
    CLI::App* c_tr = app.add_subcommand("train", "Fit monotone filters on a phantom set");
    c_tr->add_option("--images", tr.images, "directory of training images (.fflt)")->required();
    c_tr->add_option("--delta", tr.delta, "noise level the filters are trained for");
    c_tr->add_option("--noise", tr.noise, "gaussian|poisson|uniform|salt_pepper");
    c_tr->add_option("--train-count", tr.train_count, "training images (0 = all minus validation)");
    c_tr->add_option("--val-count", tr.val_count, "validation images (0 = sixth of the set, >= 1)");
    c_tr->add_option("--epochs", tr.epochs, "gradient-descent epochs");
    c_tr->add_option("--lr", tr.lr, "learning rate (fraction of the safe step)");
    c_tr->add_option("--lr-decay", tr.lr_decay, "per-epoch learning-rate factor");
    c_tr->add_option("--knots", tr.knots, "interior knots per scale");
    c_tr->add_option("--range", tr.range, "knot half-range (0 = data-driven)");
    c_tr->add_option("--levels", tr.levels, "wavelet decomposition levels");
    c_tr->add_option("--angles", tr.angles, "projection angles (default 2*size)");
    c_tr->add_option("--offsets", tr.offsets, "projection offsets (default ~size*sqrt(2))");
    c_tr->add_option("--kappa0", tr.kappa0, "finest-scale quasi-singular value");
    c_tr->add_option("--seed", tr.seed, "training/noise seed");
    c_tr->add_option("--out", tr.out, "output parameter file (.json)")->required();
    c_tr->callback([&] {
        const std::vector<Image> images = load_image_dir(tr.images);
        std::size_t n_val = tr.val_count;
        std::size_t n_train = tr.train_count;
        if (n_val == 0) n_val = std::max<std::size_t>(1, images.size() / 6);
        if (n_train == 0) {
            if (images.size() <= n_val)
                throw UsageError("--images: need more images than the validation split");
            n_train = images.size() - n_val;
        }
        const RadonGeometry g =
            geometry_for(images.front().size(), tr.angles, tr.offsets, "half_turn");
        const DfdContext ctx(g, tr.levels, tr.kappa0);
        TrainConfig cfg;
        cfg.delta = tr.delta;
        cfg.noise_kind = noise_kind_from_string(tr.noise);
        cfg.n_train = n_train;
        cfg.n_val = n_val;
        cfg.epochs = tr.epochs;
        cfg.learning_rate = tr.lr;
        cfg.lr_decay = tr.lr_decay;
        cfg.knots = tr.knots;
        cfg.range = tr.range;
        cfg.seed = RngSeed{tr.seed};
        const TrainResult result = train(build_training_pairs(images, cfg, ctx), cfg);
        save_params(result.params, tr.out);
        std::printf("train_loss=%.6g val_loss=%.6g best_epoch=%zu\n",
                    result.train_loss.back(), result.val_loss[result.best_epoch],
                    result.best_epoch);
    });

    // ---- reconstruct ------------------------------------------------------
    struct {
        std::string sinogram;
        std::string params;
        std::string filter = "identity";
        double alpha = 0.0;
        std::size_t size = 0;
        int levels = 4;
        double kappa0 = 1.0;
        std::uint64_t seed = 0;
        std::string out;
    } re;
    CLI::App* c_re = app.add_subcommand("reconstruct", "Filtered-decomposition reconstruction");
    c_re->add_option("--sinogram", re.sinogram, "input sinogram (.fsin)")->required();
    c_re->add_option("--params", re.params, "learned filter parameters (.json)");
    c_re->add_option("--filter", re.filter,
                     "identity|example_cubic|soft_threshold|linear_tikhonov");
    c_re->add_option("--alpha", re.alpha,
                     "regularization parameter (default: learned delta, else 1)");
    c_re->add_option("--size", re.size, "output image side length")->required();
    c_re->add_option("--levels", re.levels, "wavelet decomposition levels");
    c_re->add_option("--kappa0", re.kappa0, "finest-scale quasi-singular value");
    c_re->add_option("--seed", re.seed, "unused; accepted for uniformity");
    c_re->add_option("--out", re.out, "output image (.fflt or .pgm)")->required();
    c_re->callback([&] {
        const Sinogram y = read_sinogram(re.sinogram);
        const RadonGeometry g = make_calibrated_geometry(re.size, y.n_angles(),
                                                         y.n_offsets(), y.angle_range());
        const DfdContext ctx(g, re.levels, re.kappa0);
        const Filter f = make_named_filter(re.filter, re.params);
        double alpha = re.alpha;
        if (alpha <= 0.0)
            alpha = f.params() && f.params()->delta > 0.0 ? f.params()->delta : 1.0;
        write_image(reconstruct(y, f, alpha, ctx), re.out);
    });

    // ---- verify-filter ----------------------------------------------------
    struct {
        std::string filter = "example_cubic";
        std::string params;
        std::string alphas = "1";
        std::string kappas;
        double xmax = 4.0;
        std::size_t probes = 81;
        double L = 1.0;
        double alpha_tilde = 1.0;
        std::string family = "norm_q";
        double a1_c = 1.0;
        double a3_K = 2.0;
        int levels = 4;
        double kappa0 = 1.0;
        std::uint64_t seed = 0;
        std::string report;
    } vf;
    CLI::App* c_vf = app.add_subcommand("verify-filter",
                                        "Check filter conditions and report statistics");
    c_vf->add_option("--filter", vf.filter,
                     "identity|example_cubic|soft_threshold|linear_tikhonov");
    c_vf->add_option("--params", vf.params, "learned filter parameters (.json)");
    c_vf->add_option("--alphas", vf.alphas, "comma-separated alpha values");
    c_vf->add_option("--kappas", vf.kappas,
                     "comma-separated kappa values (default: dyadic scale values)");
    c_vf->add_option("--xmax", vf.xmax, "probe grid half-range");
    c_vf->add_option("--probes", vf.probes, "probe grid size (odd)");
    c_vf->add_option("--L", vf.L, "neighbour family Lipschitz constant");
    c_vf->add_option("--alpha-tilde", vf.alpha_tilde, "weak-convexity scale");
    c_vf->add_option("--family", vf.family, "smallest_q|norm_q");
    c_vf->add_option("--a1-c", vf.a1_c, "near-zero region constant");
    c_vf->add_option("--a3-K", vf.a3_K, "growth-bound constant");
    c_vf->add_option("--levels", vf.levels, "levels for the default kappa grid");
    c_vf->add_option("--kappa0", vf.kappa0, "finest-scale value for the default kappa grid");
    c_vf->add_option("--seed", vf.seed, "unused; accepted for uniformity");
    c_vf->add_option("--report,--out", vf.report, "output report (.json)")->required();
    c_vf->callback([&] {
        const Filter f = make_named_filter(vf.filter, vf.params);
        const std::vector<double> alphas = parse_double_list(vf.alphas, "--alphas");
        std::vector<double> kappas;
        if (vf.kappas.empty())
            kappas = QuasiSingularMap(vf.kappa0, vf.levels).distinct_kappas();
        else
            kappas = parse_double_list(vf.kappas, "--kappas");
        NeighbourSpec spec;
        spec.L = vf.L;
        spec.alpha_tilde = vf.alpha_tilde;
        spec.q_family = q_family_from_string(vf.family);
        const FilterReport rep =
            verify_filter(f, alphas, kappas, symmetric_grid(vf.xmax, vf.probes), spec,
                          {}, vf.a1_c, vf.a3_K);
        write_json(filter_report_to_json(rep), vf.report);
    });

    // ---- mse-table --------------------------------------------------------
    struct {
        std::string images;
        std::string params_dir;
        std::string kinds = "gaussian,poisson,uniform,salt_pepper";
        std::string deltas = "0,4,8,12,16,20,24,28";
        std::size_t angles = 0;
        std::size_t offsets = 0;
        int levels = 4;
        double kappa0 = 1.0;
        std::uint64_t seed = 0;
        std::string out;
    } mt;
    CLI::App* c_mt = app.add_subcommand("mse-table",
                                        "FBP vs learned reconstruction error sweep");
    c_mt->add_option("--images", mt.images, "directory of test images (.fflt)")->required();
    c_mt->add_option("--params-dir", mt.params_dir,
                     "directory with params_<kind>_<delta>.json files")->required();
    c_mt->add_option("--kinds", mt.kinds, "comma-separated noise kinds");
    c_mt->add_option("--deltas", mt.deltas, "comma-separated noise levels (0 = clean)");
    c_mt->add_option("--angles", mt.angles, "projection angles (default 2*size)");
    c_mt->add_option("--offsets", mt.offsets, "projection offsets (default ~size*sqrt(2))");
    c_mt->add_option("--levels", mt.levels, "wavelet decomposition levels");
    c_mt->add_option("--kappa0", mt.kappa0, "finest-scale quasi-singular value");
    c_mt->add_option("--seed", mt.seed, "noise seed");
    c_mt->add_option("--out", mt.out, "output table (.csv)")->required();
    c_mt->callback([&] {
        const std::vector<Image> images = load_image_dir(mt.images);
        const std::vector<double> deltas = parse_double_list(mt.deltas, "--deltas");
        std::vector<NoiseKind> kinds;
        for (const std::string& k : parse_string_list(mt.kinds))
            kinds.push_back(noise_kind_from_string(k));
        if (kinds.empty()) throw UsageError("--kinds: empty list");

        TrainedBank bank;
        for (NoiseKind kind : kinds) {
            for (double d : deltas) {
                if (d <= 0.0) continue;
                char name[96];
                std::snprintf(name, sizeof(name), "params_%s_%g.json", to_string(kind), d);
                const fs::path p = fs::path(mt.params_dir) / name;
                if (!fs::exists(p))
                    throw std::runtime_error(
                        std::string("no trained parameters for ") + to_string(kind) +
                        " at delta " + std::to_string(d) + " (expected " + p.string() + ")");
                bank.add(kind, d, load_params(p.string()));
            }
        }
        const RadonGeometry g =
            geometry_for(images.front().size(), mt.angles, mt.offsets, "half_turn");
        const DfdContext ctx(g, mt.levels, mt.kappa0);
        const MseTable table =
            run_mse_table(images, kinds, deltas, bank, ctx, RngSeed{mt.seed});
        write_text_file(mt.out, mse_table_to_csv(table));
    });

    // ---- convergence ------------------------------------------------------
    struct {
        std::string mode = "diagonal";
        std::string deltas = "1,0.5,0.25,0.125,0.0625,0.03125,0.015625,0.0078125,0.00390625";
        std::string alpha_rule = "proportional";
        double c = 1.0;
        std::size_t trials = 16;
        std::string filter = "example_cubic";
        std::string params;
        double L = 1.0;
        double alpha_tilde = 1.0;
        std::string family = "norm_q";
        std::size_t components = 2048;
        double kappa_exp = 0.5;
        double truth_exp = 1.5;
        std::string image;
        std::size_t angles = 0;
        std::size_t offsets = 0;
        int levels = 4;
        double kappa0 = 1.0;
        std::uint64_t seed = 0;
        std::string out;
    } cv;
    CLI::App* c_cv = app.add_subcommand("convergence",
                                        "Bregman-distance decay against the noise level");
    c_cv->add_option("--mode", cv.mode, "diagonal|ct");
    c_cv->add_option("--deltas", cv.deltas, "strictly decreasing noise levels");
    c_cv->add_option("--alpha-rule", cv.alpha_rule, "proportional|quadratic");
    c_cv->add_option("--c", cv.c, "alpha = c*delta or c*delta^2");
    c_cv->add_option("--trials", cv.trials, "noise draws per delta");
    c_cv->add_option("--filter", cv.filter,
                     "identity|example_cubic|soft_threshold|linear_tikhonov");
    c_cv->add_option("--params", cv.params, "learned filter parameters (.json)");
    c_cv->add_option("--L", cv.L, "neighbour family Lipschitz constant");
    c_cv->add_option("--alpha-tilde", cv.alpha_tilde, "weak-convexity scale");
    c_cv->add_option("--family", cv.family, "smallest_q|norm_q");
    c_cv->add_option("--components", cv.components, "diagonal mode: component count");
    c_cv->add_option("--kappa-exp", cv.kappa_exp,
                     "diagonal mode: kappa_lambda = lambda^-exp");
    c_cv->add_option("--truth-exp", cv.truth_exp,
                     "diagonal mode: truth_lambda = lambda^-exp");
    c_cv->add_option("--image", cv.image, "ct mode: truth image (.fflt)");
    c_cv->add_option("--angles", cv.angles, "ct mode: projection angles");
    c_cv->add_option("--offsets", cv.offsets, "ct mode: projection offsets");
    c_cv->add_option("--levels", cv.levels, "ct mode: wavelet decomposition levels");
    c_cv->add_option("--kappa0", cv.kappa0, "ct mode: finest-scale quasi-singular value");
    c_cv->add_option("--seed", cv.seed, "noise seed");
    c_cv->add_option("--out", cv.out, "output table (.csv)")->required();
    c_cv->callback([&] {
        ConvergenceConfig cfg;
        cfg.deltas = parse_double_list(cv.deltas, "--deltas");
        cfg.alpha_rule = alpha_rule_from_string(cv.alpha_rule);
        cfg.c = cv.c;
        cfg.filter = make_named_filter(cv.filter, cv.params);
        cfg.neighbour.L = cv.L;
        cfg.neighbour.alpha_tilde = cv.alpha_tilde;
        cfg.neighbour.q_family = q_family_from_string(cv.family);
        cfg.trials = cv.trials;
        cfg.seed = RngSeed{cv.seed};
        ExperimentRecord record;
        if (cv.mode == "diagonal") {
            DiagonalModel model;
            model.n_components = cv.components;
            model.kappa_exponent = cv.kappa_exp;
            model.truth_exponent = cv.truth_exp;
            record = run_convergence_study(cfg, model);
        } else if (cv.mode == "ct") {
            if (cv.image.empty()) throw UsageError("--mode ct requires --image");
            const Image truth = read_image(cv.image);
            const RadonGeometry g =
                geometry_for(truth.size(), cv.angles, cv.offsets, "half_turn");
            record = run_convergence_study(cfg, DfdContext(g, cv.levels, cv.kappa0), truth);
        } else {
            throw UsageError("--mode must be diagonal or ct");
        }
        write_text_file(cv.out, convergence_to_csv(record));
        std::printf("slope=%.6g ci_low=%.6g ci_high=%.6g\n", record.slope,
                    record.slope_lo, record.slope_hi);
    });

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = apply_config(std::move(args));
        std::vector<const char*> ptrs;
        ptrs.push_back(argv[0]);
        for (const std::string& a : args) ptrs.push_back(a.c_str());
        app.parse(static_cast<int>(ptrs.size()), ptrs.data());
    } catch (const UsageError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
