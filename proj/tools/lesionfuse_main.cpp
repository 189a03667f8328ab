// lesionfuse — command-line front end for the ternary lesion-segmentation
// toolkit: consensus construction, ensemble fusion, evaluation, rater
// statistics, augmentation, simulation and hyperparameter search.

#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "lesionfuse/augment.hpp"
#include "lesionfuse/bayesopt.hpp"
#include "lesionfuse/consensus.hpp"
#include "lesionfuse/fusion.hpp"
#include "lesionfuse/io.hpp"
#include "lesionfuse/metrics.hpp"
#include "lesionfuse/reporting.hpp"
#include "lesionfuse/simclf.hpp"
#include "lesionfuse/stats.hpp"
#include "lesionfuse/volume.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace lesionfuse;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes, one per error class.
enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kIoFailure = 3,
    kFormatViolation = 4,
    kDimsMismatch = 5,
    kBadArgument = 6,
};

struct RunContext {
    std::string command;
    std::vector<std::string> argv;
    std::optional<std::uint64_t> seed;
    std::vector<fs::path> inputs;
    fs::path out_dir;
};

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag_seed) {
    if (flag_seed) return *flag_seed;
    if (const char* env = std::getenv("LESIONFUSE_SEED")) return std::stoull(env);
    return std::random_device{}();
}

void prepare_out_dir(const fs::path& out) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create output directory: " + out.string());
}

void write_manifest(const RunContext& ctx) {
    json j;
    j["tool"] = "lesionfuse";
    j["version"] = kVersion;
    j["command"] = ctx.command;
    j["argv"] = ctx.argv;
    if (ctx.seed) j["seed"] = *ctx.seed;
    json inputs = json::array();
    for (const auto& p : ctx.inputs)
        inputs.push_back({{"path", p.string()}, {"fnv1a64", digest_file(p)}});
    j["inputs"] = inputs;
    j["timestamp"] = static_cast<std::int64_t>(std::time(nullptr));
    write_text_file(ctx.out_dir / "manifest.json", j.dump(2) + "\n");
}

Label parse_class(const std::string& s) {
    if (s == "lesion") return Label::Lesion;
    if (s == "uncertainty") return Label::Uncertainty;
    if (s == "background") return Label::Background;
    throw InvalidArgument("unknown class: " + s);
}

Orientation parse_orientation(const std::string& s) {
    if (s == "axial") return Orientation::Axial;
    if (s == "coronal") return Orientation::Coronal;
    if (s == "sagittal") return Orientation::Sagittal;
    throw InvalidArgument("unknown orientation: " + s);
}

std::string stem_name(const fs::path& p) {
    std::string name = p.filename().string();
    if (auto pos = name.find('.'); pos != std::string::npos) name = name.substr(0, pos);
    return name;
}

// ---------------------------------------------------------------------------
// Subcommand implementations

int run_consensus(const std::vector<std::string>& raters, const std::string& consensus,
                  unsigned threshold, const fs::path& out, RunContext& ctx) {
    RaterSet rs;
    for (const auto& p : raters) {
        rs.raters.push_back(load_label_volume(p));
        ctx.inputs.push_back(p);
    }
    rs.binary_consensus = load_label_volume(consensus);
    ctx.inputs.push_back(consensus);
    const LabelVolume ternary = build_ternary_consensus(rs, threshold);
    prepare_out_dir(out);
    save_volume(ternary, out / "ternary_consensus.lvol");
    write_manifest(ctx);
    std::cout << "wrote " << (out / "ternary_consensus.lvol").string() << "\n";
    return kOk;
}

int run_fuse(const std::array<std::string, 6>& paths, const FusionConfig& cfg,
             const fs::path& out, RunContext& ctx) {
    ClassifierBundle bundle;
    const std::array<std::pair<Orientation, Focus>, 6> slots{{
        {Orientation::Axial, Focus::Lesion},
        {Orientation::Axial, Focus::Background},
        {Orientation::Coronal, Focus::Lesion},
        {Orientation::Coronal, Focus::Background},
        {Orientation::Sagittal, Focus::Lesion},
        {Orientation::Sagittal, Focus::Background},
    }};
    for (std::size_t i = 0; i < 6; ++i) {
        bundle.get(slots[i].first, slots[i].second) = load_label_volume(paths[i]);
        ctx.inputs.push_back(paths[i]);
    }
    const LabelVolume fused = fuse(bundle, cfg);
    prepare_out_dir(out);
    save_volume(fused, out / "fused.lvol");
    write_manifest(ctx);
    std::cout << "wrote " << (out / "fused.lvol").string() << "\n";
    return kOk;
}

int run_eval(const std::string& pred_path, const std::string& gt_path, Label c,
             const ReportOptions& opt, bool per_lesion, const std::string& subject,
             const fs::path& out, RunContext& ctx) {
    const LabelVolume pred = load_label_volume(pred_path);
    const LabelVolume gt = load_label_volume(gt_path);
    ctx.inputs = {pred_path, gt_path};

    MetricReport r = full_report(pred, gt, c, opt);
    r.subject_id = subject.empty() ? stem_name(pred_path) : subject;
    prepare_out_dir(out);
    write_text_file(out / "report.csv", reports_to_csv({r}));
    write_text_file(out / "report.json", report_to_json(r).dump(2) + "\n");
    if (per_lesion) {
        const auto lesions = per_lesion_metrics(pred, gt, c, 2, opt.connectivity);
        write_text_file(out / "per_lesion.csv", per_lesion_to_csv(lesions));
    }
    write_manifest(ctx);
    std::cout << "wrote " << (out / "report.csv").string() << "\n";
    return kOk;
}

int run_compare(const std::vector<std::string>& volume_paths, std::vector<std::string> names,
                Label c, const std::vector<std::string>& metrics, const ReportOptions& opt,
                const fs::path& out, RunContext& ctx) {
    std::vector<LabelVolume> vols;
    for (const auto& p : volume_paths) {
        vols.push_back(load_label_volume(p));
        ctx.inputs.push_back(p);
    }
    if (names.empty())
        for (const auto& p : volume_paths) names.push_back(stem_name(p));
    const ComparisonMatrix m = all_vs_all(vols, names, c, metrics, opt);
    prepare_out_dir(out);
    write_text_file(out / "all_vs_all.csv", comparison_to_csv(m));
    write_text_file(out / "all_vs_all.json", comparison_to_json(m).dump(2) + "\n");
    write_manifest(ctx);
    std::cout << "wrote " << (out / "all_vs_all.csv").string() << "\n";
    return kOk;
}

int run_wilcoxon(const std::string& a_path, const std::string& b_path, double alpha,
                 const std::string& mode_str, bool per_subject, const std::string& metric,
                 bool pratt, const fs::path& out, RunContext& ctx) {
    ctx.inputs = {a_path, b_path};
    const auto a_reports = reports_from_csv(read_text_file(a_path));
    const auto b_reports = reports_from_csv(read_text_file(b_path));
    if (a_reports.empty() || b_reports.empty())
        throw FormatError("report CSV has no data rows");

    PairedSamples s;
    s.label_a = stem_name(a_path);
    s.label_b = stem_name(b_path);
    if (per_subject) {
        // Pair per-subject values of one metric, row by row.
        if (metric.empty()) throw InvalidArgument("--per-subject requires --metric");
        if (a_reports.size() != b_reports.size())
            throw InvalidArgument("per-subject pairing needs equal row counts");
        for (std::size_t i = 0; i < a_reports.size(); ++i) {
            const auto va = a_reports[i].get(metric);
            const auto vb = b_reports[i].get(metric);
            if (va && vb) s.values.emplace_back(*va, *vb);
        }
    } else {
        // Pair the per-metric mean vectors of the two report sets.
        const auto agg_a = aggregate(a_reports);
        const auto agg_b = aggregate(b_reports);
        for (std::size_t k = 0; k < agg_a.size(); ++k)
            if (agg_a[k].second.mean && agg_b[k].second.mean)
                s.values.emplace_back(*agg_a[k].second.mean, *agg_b[k].second.mean);
    }
    if (s.values.empty()) throw InvalidArgument("no defined paired values to test");

    TestMode mode = TestMode::TwoSided;
    if (mode_str == "greater") mode = TestMode::Greater;
    else if (mode_str == "less") mode = TestMode::Less;
    else if (mode_str != "two-sided") throw InvalidArgument("mode must be two-sided|greater|less");

    const WilcoxonResult r = wilcoxon_signed_rank(
        s, alpha, mode, pratt ? ZeroPolicy::Pratt : ZeroPolicy::Discard);
    prepare_out_dir(out);
    write_text_file(out / "wilcoxon.json", wilcoxon_to_json(r, alpha).dump(2) + "\n");
    write_manifest(ctx);
    std::cout << "p-value " << r.p_value << " (" << r.method << ", n=" << r.n_effective << ")\n";
    return kOk;
}

int run_split(const std::string& manifest_path, const PerCentreQuota& quota, bool enumerate_all,
              const fs::path& out, RunContext& ctx) {
    ctx.inputs = {manifest_path};
    const auto subjects = load_subject_manifest(manifest_path);
    prepare_out_dir(out);
    if (enumerate_all) {
        const auto folds = enumerate_folds(subjects, quota);
        json j = json::array();
        for (const auto& f : folds) j.push_back(split_plan_to_json(f));
        write_text_file(out / "folds.json", j.dump(2) + "\n");
        std::cout << "enumerated " << folds.size() << " folds\n";
    } else {
        const auto plan = stratified_split(subjects, quota, *ctx.seed);
        write_text_file(out / "split.json", split_plan_to_json(plan).dump(2) + "\n");
        std::cout << "wrote " << (out / "split.json").string() << "\n";
    }
    write_manifest(ctx);
    return kOk;
}

int run_augment(const fs::path& input_dir, std::uint64_t seed, const fs::path& out,
                RunContext& ctx) {
    // Input convention: paired 2D slices <stem>_img.lvol / <stem>_lbl.lvol
    // (label file optional; missing labels default to all-Background).
    if (!fs::is_directory(input_dir)) throw IoError("not a directory: " + input_dir.string());
    std::vector<std::string> stems;
    for (const auto& e : fs::directory_iterator(input_dir)) {
        const std::string name = e.path().filename().string();
        if (name.ends_with("_img.lvol")) stems.push_back(name.substr(0, name.size() - 9));
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw IoError("no *_img.lvol slices in " + input_dir.string());

    std::vector<Slice2D> sources;
    std::vector<Spacing> spacings;
    for (const auto& stem : stems) {
        const fs::path img_path = input_dir / (stem + "_img.lvol");
        const fs::path lbl_path = input_dir / (stem + "_lbl.lvol");
        const ScalarVolume img = load_scalar_volume(img_path);
        ctx.inputs.push_back(img_path);
        if (img.dims().nz != 1)
            throw FormatError("augment expects 2D slices (nz == 1): " + img_path.string());
        Slice2D s;
        s.width = img.dims().nx;
        s.height = img.dims().ny;
        s.image = img.data();
        if (fs::exists(lbl_path)) {
            const LabelVolume lbl = load_label_volume(lbl_path);
            ctx.inputs.push_back(lbl_path);
            require_same_dims(lbl.dims(), img.dims(), stem);
            s.labels = lbl.data();
        } else {
            s.labels.assign(s.width * s.height, kBackground);
        }
        sources.push_back(std::move(s));
        spacings.push_back(img.spacing());
    }

    AugmentConfig cfg;
    cfg.seed = seed;
    const auto augmented = expand_dataset(sources, cfg);
    prepare_out_dir(out);
    std::string provenance = "source,transform,parameter,output\n";
    std::vector<std::size_t> copy_counter(sources.size(), 0);
    for (const auto& a : augmented) {
        const std::string stem = stems[a.source_index];
        const std::string out_stem =
            stem + "_aug" + std::to_string(copy_counter[a.source_index]++);
        const Dims d{a.slice.width, a.slice.height, 1};
        const Spacing sp = spacings[a.source_index];
        save_volume(ScalarVolume(d, sp, a.slice.image), out / (out_stem + "_img.lvol"));
        save_volume(LabelVolume(d, sp, a.slice.labels), out / (out_stem + "_lbl.lvol"));
        provenance += stem + "," + a.transform + "," + detail::fmt(a.parameter) + "," + out_stem +
                      "\n";
    }
    write_text_file(out / "provenance.csv", provenance);
    write_manifest(ctx);
    std::cout << "augmented " << sources.size() << " slices into " << augmented.size() << "\n";
    return kOk;
}

int run_simulate(const std::vector<unsigned>& dims, const std::vector<double>& spacing,
                 unsigned n_lesions, const std::string& preset, std::uint64_t seed,
                 const fs::path& out, RunContext& ctx) {
    PhantomConfig pc;
    pc.dims = {dims[0], dims[1], dims[2]};
    pc.spacing = {spacing[0], spacing[1], spacing[2]};
    pc.n_lesions = n_lesions;
    pc.seed = seed;
    const Phantom ph = make_phantom(pc);
    NoiseModel nm = NoiseModel::preset(preset, seed);
    const ClassifierBundle bundle = simulate_bundle(ph.labels, nm);

    prepare_out_dir(out);
    save_volume(ph.intensity, out / "phantom_intensity.lvol");
    save_volume(ph.labels, out / "phantom_gt.lvol");
    json files;
    files["phantom_intensity"] = "phantom_intensity.lvol";
    files["phantom_gt"] = "phantom_gt.lvol";
    const std::array<std::pair<std::string, std::pair<Orientation, Focus>>, 6> slots{{
        {"axial_in", {Orientation::Axial, Focus::Lesion}},
        {"axial_out", {Orientation::Axial, Focus::Background}},
        {"coronal_in", {Orientation::Coronal, Focus::Lesion}},
        {"coronal_out", {Orientation::Coronal, Focus::Background}},
        {"sagittal_in", {Orientation::Sagittal, Focus::Lesion}},
        {"sagittal_out", {Orientation::Sagittal, Focus::Background}},
    }};
    for (const auto& [name, slot] : slots) {
        const std::string file = "bundle_" + name + ".lvol";
        save_volume(bundle.get(slot.first, slot.second), out / file);
        files["bundle"][name] = file;
    }
    files["noise_preset"] = preset;
    write_text_file(out / "bundle.json", files.dump(2) + "\n");
    write_manifest(ctx);
    std::cout << "wrote phantom and 6-volume bundle to " << out.string() << "\n";
    return kOk;
}

int run_optimize(const std::string& volume_path, const std::string& gt_path, Label c,
                 OptimizerConfig cfg, const fs::path& out, RunContext& ctx) {
    const ScalarVolume v = load_scalar_volume(volume_path);
    const LabelVolume gt = load_label_volume(gt_path);
    ctx.inputs = {volume_path, gt_path};
    require_same_dims(v.dims(), gt.dims(), "optimize");

    SearchSpace space{{{0.0, 1.0, 0.01}, {0.0, 1.0, 0.01}}};
    const auto result = optimize(
        [&](const std::vector<double>& x) {
            const double lo = std::min(x[0], x[1]);
            const double hi = std::max(x[0], x[1]);
            return objective_one_minus_iou({lo, hi}, v, gt, c);
        },
        space, cfg);

    prepare_out_dir(out);
    std::string csv = "iter";
    for (std::size_t d = 0; d < space.dims.size(); ++d) csv += ",x" + std::to_string(d);
    csv += ",f,best_f\n";
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : result.history) {
        best = std::min(best, t.f);
        csv += std::to_string(t.iteration);
        for (double x : t.x) csv += "," + detail::fmt(x);
        csv += "," + detail::fmt(t.f) + "," + detail::fmt(best) + "\n";
    }
    write_text_file(out / "history.csv", csv);
    json bj;
    bj["x"] = result.best.x;
    bj["f"] = result.best.f;
    bj["iteration"] = result.best.iteration;
    write_text_file(out / "best.json", bj.dump(2) + "\n");
    write_manifest(ctx);
    std::cout << "best f " << result.best.f << " at iteration " << result.best.iteration << "\n";
    return kOk;
}

int run_report(const std::string& gt_path, const std::vector<std::string>& rater_paths,
               std::vector<std::string> names, Label c, const ReportOptions& opt, bool per_lesion,
               const fs::path& out, RunContext& ctx) {
    const LabelVolume gt = load_label_volume(gt_path);
    ctx.inputs.push_back(gt_path);
    std::vector<LabelVolume> raters;
    for (const auto& p : rater_paths) {
        raters.push_back(load_label_volume(p));
        ctx.inputs.push_back(p);
    }
    if (names.empty())
        for (const auto& p : rater_paths) names.push_back(stem_name(p));
    if (names.size() != raters.size()) throw InvalidArgument("--names count mismatch");

    prepare_out_dir(out);
    std::vector<MetricReport> reports;
    for (std::size_t i = 0; i < raters.size(); ++i) {
        MetricReport r = full_report(raters[i], gt, c, opt);
        r.subject_id = names[i];
        reports.push_back(std::move(r));
    }
    write_text_file(out / "per_rater.csv", reports_to_csv(reports));
    write_text_file(out / "aggregate.csv", aggregate_to_csv(aggregate(reports)));

    // All-vs-all over raters + ground truth, each in rotation.
    std::vector<LabelVolume> all = raters;
    all.push_back(gt);
    std::vector<std::string> all_names = names;
    all_names.push_back("ground_truth");
    const ComparisonMatrix m = all_vs_all(all, all_names, c, {}, opt);
    write_text_file(out / "all_vs_all.csv", comparison_to_csv(m));

    if (per_lesion) {
        for (std::size_t i = 0; i < raters.size(); ++i) {
            const auto lesions = per_lesion_metrics(raters[i], gt, c, 2, opt.connectivity);
            write_text_file(out / ("per_lesion_" + names[i] + ".csv"),
                            per_lesion_to_csv(lesions));
        }
    }
    write_manifest(ctx);
    std::cout << "wrote report tables to " << out.string() << "\n";
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"lesionfuse: ternary consensus, ensemble fusion and evaluation toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    RunContext ctx;
    for (int i = 0; i < argc; ++i) ctx.argv.push_back(argv[i]);

    std::string out_dir = "out";
    std::optional<std::uint64_t> seed_flag;

    // consensus
    auto* c_cmd = app.add_subcommand("consensus", "build the ternary consensus from rater masks");
    std::vector<std::string> c_raters;
    std::string c_consensus;
    unsigned c_threshold = 3;
    c_cmd->add_option("raters", c_raters, "binary rater mask volumes")->required();
    c_cmd->add_option("--consensus", c_consensus, "binary consensus volume")->required();
    c_cmd->add_option("--threshold", c_threshold, "min rater lesion votes for Uncertainty");
    c_cmd->add_option("--out", out_dir, "output directory");

    // fuse
    auto* f_cmd = app.add_subcommand("fuse", "ensemble-fuse six directional classifications");
    std::array<std::string, 6> f_paths;
    int f_min_votes = 2;
    std::string f_rule = "ordered";
    bool f_double = false;
    std::string f_prefer = "axial";
    f_cmd->add_option("--axial-in", f_paths[0], "axial lesion-focused volume")->required();
    f_cmd->add_option("--axial-out", f_paths[1], "axial background-focused volume")->required();
    f_cmd->add_option("--coronal-in", f_paths[2], "coronal lesion-focused volume")->required();
    f_cmd->add_option("--coronal-out", f_paths[3], "coronal background-focused volume")->required();
    f_cmd->add_option("--sagittal-in", f_paths[4], "sagittal lesion-focused volume")->required();
    f_cmd->add_option("--sagittal-out", f_paths[5], "sagittal background-focused volume")
        ->required();
    f_cmd->add_option("--min-votes", f_min_votes, "confirmations required to keep a class");
    f_cmd->add_option("--rule", f_rule, "ordered|strict confirmation semantics");
    f_cmd->add_flag("--allow-double-downgrade", f_double,
                    "let Lesion-pass downgrades be downgraded again");
    f_cmd->add_option("--prefer", f_prefer, "orientation seeding the union");
    f_cmd->add_option("--out", out_dir, "output directory");

    // eval
    auto* e_cmd = app.add_subcommand("eval", "full metric report of one prediction against gt");
    std::string e_pred, e_gt, e_class = "lesion", e_units = "mm", e_orient = "axial", e_subject;
    bool e_per_lesion = false;
    int e_conn = 26;
    e_cmd->add_option("--pred", e_pred, "predicted label volume")->required();
    e_cmd->add_option("--gt", e_gt, "ground-truth label volume")->required();
    e_cmd->add_option("--class", e_class, "lesion|uncertainty");
    e_cmd->add_option("--units", e_units, "mm|cm for distances");
    e_cmd->add_option("--orientation", e_orient, "per-image slicing orientation");
    e_cmd->add_option("--connectivity", e_conn, "object connectivity 6|18|26");
    e_cmd->add_option("--subject", e_subject, "subject id for the report row");
    e_cmd->add_flag("--per-lesion", e_per_lesion, "also emit per-lesion metrics");
    e_cmd->add_option("--out", out_dir, "output directory");

    // compare
    auto* cm_cmd = app.add_subcommand("compare", "all-vs-all rater comparison matrix");
    std::vector<std::string> cm_vols, cm_names, cm_metrics;
    std::string cm_class = "lesion", cm_units = "mm";
    cm_cmd->add_option("volumes", cm_vols, "label volumes, each a rater")->required();
    cm_cmd->add_option("--names", cm_names, "rater names (default: file stems)");
    cm_cmd->add_option("--metrics", cm_metrics, "metric subset (default: all 20)");
    cm_cmd->add_option("--class", cm_class, "lesion|uncertainty");
    cm_cmd->add_option("--units", cm_units, "mm|cm for distances");
    cm_cmd->add_option("--out", out_dir, "output directory");

    // wilcoxon
    auto* w_cmd = app.add_subcommand("wilcoxon", "signed-rank test between two report CSVs");
    std::string w_a, w_b, w_mode = "two-sided", w_metric;
    double w_alpha = 0.01;
    bool w_per_subject = false, w_pratt = false;
    w_cmd->add_option("--a", w_a, "first report CSV")->required();
    w_cmd->add_option("--b", w_b, "second report CSV")->required();
    w_cmd->add_option("--alpha", w_alpha, "significance level");
    w_cmd->add_option("--mode", w_mode, "two-sided|greater|less");
    w_cmd->add_flag("--per-subject", w_per_subject, "pair rows instead of per-metric means");
    w_cmd->add_option("--metric", w_metric, "metric name for --per-subject pairing");
    w_cmd->add_flag("--pratt", w_pratt, "keep zero differences in the ranking");
    w_cmd->add_option("--out", out_dir, "output directory");

    // split
    auto* s_cmd = app.add_subcommand("split", "per-centre stratified subject split");
    std::string s_manifest;
    unsigned s_train = 3, s_val = 1, s_test = 1;
    bool s_enum = false;
    s_cmd->add_option("--manifest", s_manifest, "CSV with header subject_id,centre")->required();
    s_cmd->add_option("--train", s_train, "train subjects per centre");
    s_cmd->add_option("--val", s_val, "validation subjects per centre");
    s_cmd->add_option("--test", s_test, "test subjects per centre");
    s_cmd->add_flag("--enumerate", s_enum, "emit every fold satisfying the quota");
    s_cmd->add_option("--seed", seed_flag, "RNG seed");
    s_cmd->add_option("--out", out_dir, "output directory");

    // augment
    auto* a_cmd = app.add_subcommand("augment", "expand a slice directory by the 5x recipe");
    std::string a_input;
    a_cmd->add_option("--input", a_input, "directory of <stem>_img.lvol [+ _lbl.lvol] slices")
        ->required();
    a_cmd->add_option("--seed", seed_flag, "RNG seed");
    a_cmd->add_option("--out", out_dir, "output directory");

    // simulate
    auto* si_cmd = app.add_subcommand("simulate", "phantom + simulated 6-classifier bundle");
    std::vector<unsigned> si_dims{32, 32, 32};
    std::vector<double> si_spacing{1.0, 1.0, 1.0};
    unsigned si_lesions = 3;
    std::string si_preset = "low";
    si_cmd->add_option("--dims", si_dims, "nx ny nz")->expected(3);
    si_cmd->add_option("--spacing", si_spacing, "sx sy sz in mm")->expected(3);
    si_cmd->add_option("--lesions", si_lesions, "number of phantom lesions");
    si_cmd->add_option("--noise-preset", si_preset, "none|low|med|high");
    si_cmd->add_option("--seed", seed_flag, "RNG seed");
    si_cmd->add_option("--out", out_dir, "output directory");

    // optimize
    auto* o_cmd = app.add_subcommand("optimize", "Bayesian threshold search minimizing 1-IoU");
    std::string o_volume, o_gt, o_class = "lesion";
    OptimizerConfig o_cfg;
    o_cmd->add_option("--volume", o_volume, "scalar intensity volume")->required();
    o_cmd->add_option("--gt", o_gt, "ground-truth label volume")->required();
    o_cmd->add_option("--class", o_class, "lesion|uncertainty|background");
    o_cmd->add_option("--budget", o_cfg.budget, "total objective evaluations");
    o_cmd->add_option("--n-initial", o_cfg.n_initial, "Latin-hypercube design size");
    o_cmd->add_option("--candidates", o_cfg.n_candidates, "acquisition samples per step");
    o_cmd->add_option("--seed", seed_flag, "RNG seed");
    o_cmd->add_option("--out", out_dir, "output directory");

    // report
    auto* r_cmd = app.add_subcommand("report", "per-rater tables, aggregate and all-vs-all");
    std::string r_gt, r_class = "lesion", r_units = "mm";
    std::vector<std::string> r_raters, r_names;
    bool r_per_lesion = false;
    r_cmd->add_option("--gt", r_gt, "ground-truth label volume")->required();
    r_cmd->add_option("raters", r_raters, "rater label volumes")->required();
    r_cmd->add_option("--names", r_names, "rater names");
    r_cmd->add_option("--class", r_class, "lesion|uncertainty");
    r_cmd->add_option("--units", r_units, "mm|cm for distances");
    r_cmd->add_flag("--per-lesion", r_per_lesion, "emit per-lesion scatter tables");
    r_cmd->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsage;
    }

    try {
        ctx.out_dir = out_dir;
        if (c_cmd->parsed()) {
            ctx.command = "consensus";
            return run_consensus(c_raters, c_consensus, c_threshold, out_dir, ctx);
        }
        if (f_cmd->parsed()) {
            ctx.command = "fuse";
            FusionConfig cfg;
            cfg.min_votes = f_min_votes;
            if (f_rule == "strict") cfg.rule = ConfirmationRule::Strict;
            else if (f_rule != "ordered") throw InvalidArgument("rule must be ordered|strict");
            cfg.allow_double_downgrade = f_double;
            cfg.preferred = parse_orientation(f_prefer);
            return run_fuse(f_paths, cfg, out_dir, ctx);
        }
        if (e_cmd->parsed()) {
            ctx.command = "eval";
            ReportOptions opt;
            opt.units = e_units;
            opt.orientation = parse_orientation(e_orient);
            opt.connectivity = e_conn;
            return run_eval(e_pred, e_gt, parse_class(e_class), opt, e_per_lesion, e_subject,
                            out_dir, ctx);
        }
        if (cm_cmd->parsed()) {
            ctx.command = "compare";
            ReportOptions opt;
            opt.units = cm_units;
            return run_compare(cm_vols, cm_names, parse_class(cm_class), cm_metrics, opt, out_dir,
                               ctx);
        }
        if (w_cmd->parsed()) {
            ctx.command = "wilcoxon";
            return run_wilcoxon(w_a, w_b, w_alpha, w_mode, w_per_subject, w_metric, w_pratt,
                                out_dir, ctx);
        }
        if (s_cmd->parsed()) {
            ctx.command = "split";
            ctx.seed = resolve_seed(seed_flag);
            return run_split(s_manifest, {s_train, s_val, s_test}, s_enum, out_dir, ctx);
        }
        if (a_cmd->parsed()) {
            ctx.command = "augment";
            ctx.seed = resolve_seed(seed_flag);
            return run_augment(a_input, *ctx.seed, out_dir, ctx);
        }
        if (si_cmd->parsed()) {
            ctx.command = "simulate";
            ctx.seed = resolve_seed(seed_flag);
            return run_simulate(si_dims, si_spacing, si_lesions, si_preset, *ctx.seed, out_dir,
                                ctx);
        }
        if (o_cmd->parsed()) {
            ctx.command = "optimize";
            ctx.seed = resolve_seed(seed_flag);
            o_cfg.seed = *ctx.seed;
            return run_optimize(o_volume, o_gt, parse_class(o_class), o_cfg, out_dir, ctx);
        }
        if (r_cmd->parsed()) {
            ctx.command = "report";
            ReportOptions opt;
            opt.units = r_units;
            return run_report(r_gt, r_raters, r_names, parse_class(r_class), opt, r_per_lesion,
                              out_dir, ctx);
        }
    } catch (const IoError& e) {
        std::cerr << "error: io: " << e.what() << "\n";
        return kIoFailure;
    } catch (const FormatError& e) {
        std::cerr << "error: format: " << e.what() << "\n";
        return kFormatViolation;
    } catch (const DimensionMismatch& e) {
        std::cerr << "error: dims: " << e.what() << "\n";
        return kDimsMismatch;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: argument: " << e.what() << "\n";
        return kBadArgument;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << "\n";
        return 1;
    }
    return kUsage;
}
