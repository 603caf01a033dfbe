#include "experiment.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <vector>

#include "pentropy/engine.hpp"
#include "pentropy/gaussian.hpp"
#include "pentropy/kernels.hpp"
#include "pentropy/spectral.hpp"
#include "pentropy/tower.hpp"
#include "pentropy/version.hpp"

namespace pentropy::cli {

namespace {

using nlohmann::ordered_json;

// --- config access with field paths ----------------------------------------

std::string join_path(const std::string& base, const std::string& key) {
    return base.empty() ? key : base + "." + key;
}

const ordered_json& require_key(const ordered_json& doc, const std::string& base,
                                const std::string& key) {
    if (!doc.is_object() || !doc.contains(key))
        throw ConfigError(join_path(base, key), "missing required field");
    return doc.at(key);
}

std::string require_string(const ordered_json& doc, const std::string& base,
                           const std::string& key) {
    const auto& v = require_key(doc, base, key);
    if (!v.is_string()) throw ConfigError(join_path(base, key), "expected a string");
    return v.get<std::string>();
}

double require_number(const ordered_json& doc, const std::string& base,
                      const std::string& key) {
    const auto& v = require_key(doc, base, key);
    if (!v.is_number()) throw ConfigError(join_path(base, key), "expected a number");
    return v.get<double>();
}

std::int64_t require_int(const ordered_json& doc, const std::string& base,
                         const std::string& key) {
    const auto& v = require_key(doc, base, key);
    if (!v.is_number_integer()) throw ConfigError(join_path(base, key), "expected an integer");
    return v.get<std::int64_t>();
}

std::int64_t optional_int(const ordered_json& doc, const std::string& base,
                          const std::string& key, std::int64_t fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    return require_int(doc, base, key);
}

double optional_number(const ordered_json& doc, const std::string& base,
                       const std::string& key, double fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    return require_number(doc, base, key);
}

std::string optional_string(const ordered_json& doc, const std::string& base,
                            const std::string& key, const std::string& fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    return require_string(doc, base, key);
}

bool optional_bool(const ordered_json& doc, const std::string& base, const std::string& key,
                   bool fallback) {
    if (!doc.is_object() || !doc.contains(key)) return fallback;
    const auto& v = doc.at(key);
    if (!v.is_boolean()) throw ConfigError(join_path(base, key), "expected a boolean");
    return v.get<bool>();
}

const ordered_json& require_array(const ordered_json& doc, const std::string& base,
                                  const std::string& key) {
    const auto& v = require_key(doc, base, key);
    if (!v.is_array()) throw ConfigError(join_path(base, key), "expected an array");
    return v;
}

// --- shared pieces ----------------------------------------------------------

Real50 parse_real50(const std::string& text, const std::string& path) {
    if (text == "golden_mean")
        return (boost::multiprecision::sqrt(Real50(5)) - 1) / 2;
    try {
        const auto slash = text.find('/');
        if (slash != std::string::npos)
            return Real50(text.substr(0, slash)) / Real50(text.substr(slash + 1));
        return Real50(text);
    } catch (const std::exception&) {
        throw ConfigError(path, "cannot parse real value '" + text + "'");
    }
}

ProgressionSequence parse_sequence(const ordered_json& doc, const std::string& base) {
    if (doc.contains("entries")) {
        std::vector<ProgressionEntry> entries;
        for (const auto& item : require_array(doc, base, "entries")) {
            if (!item.is_array() || item.size() != 2)
                throw ConfigError(join_path(base, "entries"), "entries must be [j, L] pairs");
            entries.push_back({item[0].get<std::int64_t>(), item[1].get<std::int64_t>()});
        }
        try {
            return ProgressionSequence(std::move(entries));
        } catch (const Error& e) {
            throw ConfigError(join_path(base, "entries"), e.what());
        }
    }
    const std::string rule = require_string(doc, base, "rule");
    const std::int64_t j_max = require_int(doc, base, "j_max");
    if (j_max < 2) throw ConfigError(join_path(base, "j_max"), "needs j_max >= 2");
    if (rule == "l_equals_j") return ProgressionSequence::length_equals_j(j_max);
    if (rule == "powers_of_two") return ProgressionSequence::length_powers_of_two(j_max);
    throw ConfigError(join_path(base, "rule"), "unknown rule '" + rule + "'");
}

SpectralMeasure parse_measure(const ordered_json& doc, const std::string& base) {
    if (doc.contains("preset")) {
        const std::string preset = require_string(doc, base, "preset");
        if (preset == "white") return SpectralMeasure::lebesgue();
        if (preset == "dirac") return SpectralMeasure::dirac_zero();
        if (preset == "half_atom_half_uniform")
            return SpectralMeasure({{0.0, 0.5}}, {{0.0, 1.0, 0.5}}, std::nullopt);
        throw ConfigError(join_path(base, "preset"), "unknown preset '" + preset + "'");
    }
    try {
        return SpectralMeasure::from_json(doc);
    } catch (const Error& e) {
        throw ConfigError(base, e.what());
    }
}

struct SamplingConfig {
    std::uint64_t samples = 200000;
    std::uint64_t seed = 1;
    std::uint64_t support_cap = 1000000;
};

SamplingConfig parse_sampling(const ordered_json& doc, const std::string& base,
                              const RunOptions& options) {
    SamplingConfig out;
    if (doc.contains("sampling")) {
        const auto& s = doc.at("sampling");
        const std::string path = join_path(base, "sampling");
        out.samples = static_cast<std::uint64_t>(optional_int(s, path, "samples", 200000));
        out.seed = static_cast<std::uint64_t>(optional_int(s, path, "seed", 1));
        out.support_cap =
            static_cast<std::uint64_t>(optional_int(s, path, "support_cap", 1000000));
    }
    if (options.samples_override) out.samples = *options.samples_override;
    if (options.seed_override) out.seed = *options.seed_override;
    return out;
}

// --- report writing -----------------------------------------------------------

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

ordered_json make_meta(const std::string& subcommand, const ordered_json& config) {
    return ordered_json{{"subcommand", subcommand},
                        {"config_hash", config_hash(config)},
                        {"versions",
                         {{"pentropy", PENTROPY_VERSION_STRING},
                          {"kernels", kernels::isa_name(kernels::active_isa())}}},
                        {"generated_at", timestamp_utc()},
                        {"incomplete", false}};
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << contents;
}

struct ReportSink {
    std::filesystem::path dir;
    ordered_json report;
    std::string summary;
    std::string per_j_csv;    // optional
    std::string spectra_csv;  // optional
    std::string extra_name;   // optional extra file (e.g. tower.json)
    std::string extra_body;

    void flush(const RunOptions& options) const {
        std::filesystem::create_directories(dir);
        write_file(dir / "report.json", report.dump(2) + "\n");
        write_file(dir / "summary.txt", summary);
        if (!per_j_csv.empty())
            write_file(dir / "per_j.csv",
                       "partition_id,j,L,h_j,stderr,method\n" + per_j_csv);
        if (!spectra_csv.empty()) write_file(dir / "spectra.csv", spectra_csv);
        if (!extra_name.empty()) write_file(dir / extra_name, extra_body);
        if (options.format == "csv")
            std::cout << (per_j_csv.empty() ? spectra_csv : per_j_csv);
        else
            std::cout << report.dump(2) << "\n";
    }
};

void apply_kernel_choice(const RunOptions& options) {
    if (options.kernels == "auto") {
        kernels::select_best_isa();
    } else if (options.kernels == "scalar") {
        kernels::select_isa(kernels::Isa::scalar);
    } else if (options.kernels == "avx2") {
        kernels::select_isa(kernels::Isa::avx2);
    } else {
        throw ConfigError("--kernels", "expected auto|scalar|avx2");
    }
}

// --- systems from config --------------------------------------------------------

struct BuiltSystem {
    std::unique_ptr<SystemModel> system;
    std::vector<std::unique_ptr<SystemPartition>> family;
    std::shared_ptr<const GaussianTrajectorySampler> sampler;  // gaussian only
    std::shared_ptr<TowerConstruction> tower;                  // rank_one only
};

std::int64_t sequence_max_p(const ProgressionSequence& seq) {
    std::int64_t max_p = 0;
    for (const auto& e : seq.entries()) max_p = std::max(max_p, e.j * e.length);
    return max_p;
}

BuiltSystem build_system(const ordered_json& config, const ProgressionSequence& sequence,
                         const std::string& base) {
    const auto& sys = require_key(config, "", "system");
    const std::string sys_path = join_path(base, "system");
    const std::string kind = require_string(sys, sys_path, "kind");
    const auto& parts = require_key(config, "", "partitions");
    const std::string parts_path = join_path(base, "partitions");

    BuiltSystem out;
    if (kind == "identity") {
        out.system = std::make_unique<IdentitySystem>();
        const auto& list = require_array(parts, parts_path, "masses_list");
        std::size_t idx = 0;
        for (const auto& masses : list) {
            try {
                out.family.push_back(std::make_unique<MassPartition>(
                    "masses" + std::to_string(idx),
                    Partition::from_masses(masses.get<std::vector<double>>())));
            } catch (const Error& e) {
                throw ConfigError(join_path(parts_path, "masses_list"), e.what());
            }
            ++idx;
        }
    } else if (kind == "bernoulli") {
        const auto probs = require_array(sys, sys_path, "probs").get<std::vector<double>>();
        auto bernoulli = std::make_unique<BernoulliSystem>(probs);
        if (parts.contains("groups_list")) {
            std::size_t idx = 0;
            for (const auto& groups : require_array(parts, parts_path, "groups_list")) {
                out.family.push_back(std::make_unique<SymbolPartition>(bernoulli->group_partition(
                    "groups" + std::to_string(idx), groups.get<std::vector<std::uint32_t>>())));
                ++idx;
            }
        } else {
            out.family.push_back(
                std::make_unique<SymbolPartition>(bernoulli->generating_partition()));
        }
        out.system = std::move(bernoulli);
    } else if (kind == "rotation") {
        const std::string angle = require_string(sys, sys_path, "angle");
        out.system = std::make_unique<RotationSystem>(
            parse_real50(angle, join_path(sys_path, "angle")));
        if (parts.contains("breakpoints_list")) {
            std::size_t idx = 0;
            for (const auto& bps : require_array(parts, parts_path, "breakpoints_list")) {
                std::vector<Real50> breaks;
                for (const auto& b : bps)
                    breaks.push_back(parse_real50(b.get<std::string>(),
                                                  join_path(parts_path, "breakpoints_list")));
                out.family.push_back(
                    std::make_unique<ArcPartition>("arcs" + std::to_string(idx), breaks));
                ++idx;
            }
        } else {
            const auto depth = optional_int(parts, parts_path, "dyadic_depth", 2);
            for (auto& p : dyadic_arc_family(static_cast<int>(depth)))
                out.family.push_back(std::move(p));
        }
    } else if (kind == "gaussian") {
        const auto& measure_doc = require_key(sys, sys_path, "measure");
        SpectralMeasure sigma = parse_measure(measure_doc, join_path(sys_path, "measure"));
        std::int64_t horizon = optional_int(sys, sys_path, "horizon", 0);
        const auto max_dim =
            static_cast<std::size_t>(optional_int(sys, sys_path, "max_dimension", 64));
        std::int64_t coord_span = 0;
        const auto& cylinders = require_array(parts, parts_path, "cylinders");
        for (const auto& c : cylinders)
            if (c.contains("coord"))
                coord_span = std::max(coord_span, std::abs(c.at("coord").get<std::int64_t>()));
        if (horizon <= 0) horizon = sequence_max_p(sequence) + coord_span + 8;
        auto sampler = std::make_shared<const GaussianTrajectorySampler>(std::move(sigma),
                                                                         horizon, max_dim);
        std::size_t idx = 0;
        for (const auto& c : cylinders) {
            const std::string cyl_path =
                join_path(parts_path, "cylinders[" + std::to_string(idx) + "]");
            const std::string type = optional_string(c, cyl_path, "type", "sign");
            if (type == "sign") {
                out.family.push_back(std::make_unique<CylinderPartition>(
                    CylinderPartition::sign(*sampler, require_int(c, cyl_path, "coord"))));
            } else if (type == "quantiles") {
                out.family.push_back(std::make_unique<CylinderPartition>(
                    CylinderPartition::quantiles(*sampler, require_int(c, cyl_path, "coord"),
                                                 static_cast<int>(require_int(c, cyl_path,
                                                                              "cells")))));
            } else if (type == "boxes") {
                out.family.push_back(
                    std::make_unique<CylinderPartition>(CylinderPartition::make(
                        *sampler, "boxes" + std::to_string(idx),
                        require_array(c, cyl_path, "coords").get<std::vector<std::int64_t>>(),
                        require_array(c, cyl_path, "thresholds")
                            .get<std::vector<std::vector<double>>>())));
            } else {
                throw ConfigError(join_path(cyl_path, "type"),
                                  "expected sign|quantiles|boxes");
            }
            ++idx;
        }
        out.system = std::make_unique<GaussianSystem>(sampler);
        out.sampler = sampler;
    } else if (kind == "rank_one") {
        std::shared_ptr<TowerConstruction> tower;
        int stage;
        if (sys.contains("synthesis")) {
            const auto& syn = sys.at("synthesis");
            const std::string syn_path = join_path(sys_path, "synthesis");
            SynthesisOptions opts;
            opts.measure_cap = optional_number(syn, syn_path, "measure_cap", 1e6);
            opts.max_escalations =
                static_cast<int>(optional_int(syn, syn_path, "max_escalations", 6));
            const int depth = static_cast<int>(require_int(syn, syn_path, "depth"));
            tower = sidon_spacer_synthesis(sequence, depth, opts).tower;
            stage = static_cast<int>(optional_int(sys, sys_path, "stage", depth));
        } else {
            TowerConstruction built(optional_number(sys, sys_path, "measure_cap", 1e6));
            for (const auto& st : require_array(sys, sys_path, "stages")) {
                StageSpec spec;
                spec.cuts = st.at("r").get<std::int64_t>();
                spec.spacers = st.at("spacers").get<std::vector<std::int64_t>>();
                built.add_stage(spec);
            }
            tower = std::make_shared<TowerConstruction>(std::move(built));
            stage = static_cast<int>(
                optional_int(sys, sys_path, "stage", tower->deepest_stage()));
        }
        auto system = std::make_unique<RankOneSystem>(tower, stage);
        if (parts.contains("level_labels")) {
            out.family.push_back(std::make_unique<LevelPartition>(
                "levels", stage,
                require_array(parts, parts_path, "level_labels")
                    .get<std::vector<std::uint32_t>>()));
        } else {
            out.family.push_back(std::make_unique<LevelPartition>(
                LevelPartition::halves(stage, system->height())));
        }
        out.tower = tower;
        out.system = std::move(system);
    } else {
        throw ConfigError(join_path(sys_path, "kind"),
                          "expected identity|bernoulli|rotation|gaussian|rank_one");
    }

    if (out.family.empty())
        throw ConfigError(parts_path, "partition family is empty");
    return out;
}

}  // namespace

std::string config_hash(const ordered_json& config) {
    const std::string dump = config.dump();
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (const unsigned char c : dump) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

nlohmann::ordered_json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("(config path)", "cannot open '" + path + "'");
    try {
        return nlohmann::ordered_json::parse(in);
    } catch (const std::exception& e) {
        throw ConfigError("(config body)", std::string("JSON parse failure: ") + e.what());
    }
}

// --- entropy -------------------------------------------------------------------

int run_entropy(const RunOptions& options) {
    apply_kernel_choice(options);
    const ordered_json config = load_config(options.config_path);

    const auto& seq_doc = require_key(config, "", "sequence");
    const ProgressionSequence sequence = parse_sequence(seq_doc, "sequence");
    BuiltSystem built = build_system(config, sequence, "");
    const SamplingConfig sampling = parse_sampling(config, "", options);
    const double tail_fraction = optional_number(config, "", "tail_fraction", 0.5);
    const bool allow_skips = optional_bool(config, "", "allow_skips", false);
    const std::string mode_name = optional_string(config, "", "mode", "auto");
    if (mode_name != "auto" && mode_name != "exact" && mode_name != "sampled")
        throw ConfigError("mode", "expected auto|exact|sampled");

    EstimationMode mode;
    mode.prefer_exact = mode_name != "sampled";
    mode.plan.n_samples = sampling.samples;
    mode.plan.seed = sampling.seed;
    mode.plan.support_cap = sampling.support_cap;
    if (mode_name == "exact" && !built.system->exact_join_capable())
        throw ConfigError("mode", "system '" + built.system->kind() +
                                      "' has no exact-join capability");

    ReportSink sink;
    sink.dir = options.out_dir;
    sink.report = ordered_json{{"meta", make_meta("entropy", config)}, {"config", config}};

    bool incomplete = false;
    ordered_json reports = ordered_json::array();
    const auto family = family_view(built.family);
    std::ostringstream summary;
    summary << "# pentropy entropy run (" << timestamp_utc() << ")\n";
    summary << "system: " << built.system->kind() << ", partitions: " << family.size()
            << ", entries: " << sequence.size() << "\n\n";

    for (const auto* xi : family) {
        try {
            PEntropyReport report =
                h_p(*built.system, *xi, sequence, tail_fraction, mode, allow_skips);
            sink.per_j_csv += report.to_csv_rows();
            reports.push_back(ordered_json(report.to_json()));
            summary << xi->id() << ": H(xi) = " << report.partition_entropy
                    << ", h_P estimate = " << report.h_p_estimate << " (tail max over "
                    << report.tail_window << " rows)\n";
        } catch (const Error& e) {
            incomplete = true;
            reports.push_back(ordered_json{{"partition_id", xi->id()}, {"error", e.what()}});
            summary << xi->id() << ": FAILED (" << e.what() << ")\n";
        }
    }
    sink.report["results"]["reports"] = reports;

    if (optional_bool(config, "", "sup", true)) {
        try {
            const SupResult sup =
                h_p_sup(*built.system, family, sequence, tail_fraction, mode, allow_skips);
            sink.report["results"]["h_P_sup"] = {{"lower_bound", sup.lower_bound},
                                                 {"witness", sup.witness_id}};
            summary << "\nh_P sup over family >= " << sup.lower_bound << " (witness "
                    << sup.witness_id << ")\n";
        } catch (const Error& e) {
            incomplete = true;
            sink.report["results"]["h_P_sup"] = {{"error", e.what()}};
        }
    }
    if (config.contains("cpe")) {
        const double threshold = optional_number(config.at("cpe"), "cpe", "threshold", 0.0);
        try {
            const CpeReport cpe = cpe_probe(*built.system, family, sequence, threshold,
                                            tail_fraction, mode, allow_skips);
            sink.report["results"]["cpe"] = {{"all_positive", cpe.all_positive},
                                             {"min_h_P", cpe.min_h_p},
                                             {"threshold", cpe.threshold},
                                             {"failing", cpe.failing_partitions}};
            summary << "cpe probe: all_positive = " << (cpe.all_positive ? "true" : "false")
                    << ", min h_P = " << cpe.min_h_p << ", threshold = " << cpe.threshold
                    << "\n";
        } catch (const Error& e) {
            incomplete = true;
            sink.report["results"]["cpe"] = {{"error", e.what()}};
        }
    }

    // Optional plot-ready trajectory dump for Gaussian systems.
    if (built.sampler && config.at("system").contains("dump_trajectory")) {
        const auto& dump = config.at("system").at("dump_trajectory");
        const auto indices = require_array(dump, "system.dump_trajectory", "indices")
                                 .get<std::vector<std::int64_t>>();
        const auto seed = static_cast<std::uint64_t>(
            optional_int(dump, "system.dump_trajectory", "seed", 1));
        std::filesystem::create_directories(sink.dir);
        write_file(sink.dir / "trajectory.csv", trajectory_csv(*built.sampler, indices, seed));
    }

    sink.report["meta"]["incomplete"] = incomplete;
    sink.summary = summary.str();
    sink.flush(options);
    return incomplete ? 1 : 0;
}

// --- orthogonality ----------------------------------------------------------------

int run_orthogonality(const RunOptions& options) {
    apply_kernel_choice(options);
    const ordered_json config = load_config(options.config_path);

    const ProgressionSequence sequence =
        parse_sequence(require_key(config, "", "sequence"), "sequence");
    const int depth = static_cast<int>(require_int(config, "", "depth"));

    SynthesisOptions opts;
    if (config.contains("synthesis")) {
        const auto& syn = config.at("synthesis");
        opts.measure_cap = optional_number(syn, "synthesis", "measure_cap", 1e6);
        opts.max_escalations =
            static_cast<int>(optional_int(syn, "synthesis", "max_escalations", 6));
        opts.initial_scale = optional_number(syn, "synthesis", "initial_scale", 1.0);
    }

    ReportSink sink;
    sink.dir = options.out_dir;
    sink.report =
        ordered_json{{"meta", make_meta("orthogonality", config)}, {"config", config}};
    std::ostringstream summary;
    summary << "# pentropy orthogonality run (" << timestamp_utc() << ")\n";

    bool incomplete = false;
    try {
        const SynthesisReport synthesis = sidon_spacer_synthesis(sequence, depth, opts);
        ordered_json verdicts = ordered_json::array();
        summary << "synthesis: ok after " << synthesis.escalations_used
                << " escalations, level stride " << synthesis.separation << "\n\n";
        summary << "  j | spacer module M_n | |X_j| levels | mu(X_j) | disjoint\n";
        for (const auto& note : synthesis.notes) {
            const auto p_set = sequence.progression(static_cast<std::size_t>(note.j - 1));
            const DisjointnessVerdict verdict =
                check_disjoint(*synthesis.tower, note.j, p_set);
            verdicts.push_back(ordered_json{{"j", note.j},
                                            {"spacer_module", note.spacer_module},
                                            {"marker_levels", note.marker_levels},
                                            {"marker_measure", note.marker_measure},
                                            {"disjoint", verdict.disjoint},
                                            {"witnesses", verdict.witnesses.size()}});
            summary << "  " << note.j << " | " << note.spacer_module << " | "
                    << note.marker_levels << " | " << note.marker_measure << " | "
                    << (verdict.disjoint ? "yes" : "NO") << "\n";
        }
        sink.report["results"]["verdicts"] = verdicts;
        sink.report["results"]["escalations"] = synthesis.escalations_used;
        sink.extra_name = "tower.json";
        sink.extra_body = synthesis.tower->to_json().dump() + "\n";
    } catch (const SynthesisFailureError& e) {
        incomplete = true;
        sink.report["results"]["synthesis_failure"] = {{"first_failing_j", e.first_failing_j},
                                                       {"message", e.what()}};
        summary << "synthesis FAILED at j=" << e.first_failing_j << ": " << e.what() << "\n";
    }

    if (optional_bool(config, "", "control_spacer_free", false)) {
        // Spacer-free control: translates must overlap, with an exact witness.
        TowerConstruction control(1e6);
        const int stages = static_cast<int>(optional_int(config, "", "control_stages", 3));
        for (int n = 0; n < stages; ++n) control.add_stage({2, {0, 0}});
        std::vector<std::int64_t> all(static_cast<std::size_t>(control.height(stages)));
        for (std::size_t k = 0; k < all.size(); ++k) all[k] = static_cast<std::int64_t>(k);
        control.mark_x(1, {stages, all});
        const std::vector<std::int64_t> p_set{1, 2};
        try {
            const DisjointnessVerdict verdict = check_disjoint(control, 1, p_set);
            ordered_json witnesses = ordered_json::array();
            for (const auto& w : verdict.witnesses)
                witnesses.push_back(ordered_json{{"p", w.p},
                                                 {"q", w.q},
                                                 {"level", w.level},
                                                 {"lo", w.where.lo.str()},
                                                 {"hi", w.where.hi.str()}});
            sink.report["results"]["control"] = {{"disjoint", verdict.disjoint},
                                                 {"witnesses", witnesses}};
            summary << "\ncontrol (spacer-free, X = full tower): disjoint = "
                    << (verdict.disjoint ? "yes (unexpected)" : "no, witnesses found") << "\n";
        } catch (const NeedsDeeperStageError& e) {
            incomplete = true;
            sink.report["results"]["control"] = {{"error", e.what()}};
        }
    }

    sink.report["meta"]["incomplete"] = incomplete;
    sink.summary = summary.str();
    sink.flush(options);
    return incomplete ? 1 : 0;
}

// --- spectral ------------------------------------------------------------------------

int run_spectral(const RunOptions& options) {
    apply_kernel_choice(options);
    const ordered_json config = load_config(options.config_path);

    const auto n_max = require_int(config, "", "n_max");
    if (n_max < 8) throw ConfigError("n_max", "needs n_max >= 8");

    std::vector<double> coeffs;
    std::string source;
    if (config.contains("synthetic")) {
        const double alpha =
            require_number(config.at("synthetic"), "synthetic", "power_decay_alpha");
        coeffs = power_decay_coeffs(alpha, n_max);
        source = "synthetic power decay alpha=" + std::to_string(alpha);
    } else {
        const SpectralMeasure sigma =
            parse_measure(require_key(config, "", "measure"), "measure");
        coeffs = sigma.fourier(n_max);
        source = "measure";
    }

    std::vector<int> powers{1, 2};
    if (config.contains("convolution_powers"))
        powers = require_array(config, "", "convolution_powers").get<std::vector<int>>();

    ReportSink sink;
    sink.dir = options.out_dir;
    sink.report = ordered_json{{"meta", make_meta("spectral", config)}, {"config", config}};
    std::ostringstream summary;
    summary << "# pentropy spectral run (" << timestamp_utc() << ")\n";
    summary << "coefficients from " << source << ", n_max = " << n_max << "\n";

    // spectra.csv: n, r, then one column per requested convolution power.
    std::ostringstream csv;
    csv.precision(17);
    csv << "n,r";
    std::vector<std::vector<double>> power_coeffs;
    for (const int m : powers) {
        csv << ",r_pow" << m;
        power_coeffs.push_back(convolution_power_coeffs(coeffs, m));
    }
    csv << "\n";
    for (std::int64_t n = 0; n <= n_max; ++n) {
        csv << n << ',' << coeffs[static_cast<std::size_t>(n)];
        for (const auto& pc : power_coeffs) csv << ',' << pc[static_cast<std::size_t>(n)];
        csv << "\n";
    }
    sink.spectra_csv = csv.str();

    const std::int64_t wiener_n = optional_int(config, "", "wiener_n", n_max - 1);
    const WienerReport wiener = wiener_continuity_test(coeffs, wiener_n);
    ordered_json wiener_doc{{"mean_square", wiener.mean_square},
                            {"atom_mass_sq_estimate", wiener.atom_mass_sq_estimate},
                            {"dyadic_means", ordered_json::array()}};
    for (const auto& [n, m] : wiener.dyadic_means)
        wiener_doc["dyadic_means"].push_back({n, m});
    sink.report["results"]["wiener"] = wiener_doc;
    summary << "wiener mean |r|^2 at N=" << wiener_n << ": " << wiener.mean_square
            << " (atom mass squared estimate)\n";

    const std::int64_t ac_n = optional_int(config, "", "ac_n", n_max - 1);
    ordered_json ac_docs = ordered_json::array();
    for (const int m : powers) {
        const AcReport ac = ac_diagnostic(coeffs, m, ac_n);
        ordered_json doc{{"power", m},
                         {"verdict", ac_verdict_name(ac.verdict)},
                         {"tail_increment_ratio", ac.tail_increment_ratio},
                         {"interpretation", ac.interpretation},
                         {"l2_partial_sums", ordered_json::array()}};
        for (const auto& [n, s] : ac.l2_partial_sums) doc["l2_partial_sums"].push_back({n, s});
        ac_docs.push_back(doc);
        summary << "l2 diagnostic, power " << m << ": " << ac_verdict_name(ac.verdict)
                << " (tail increment ratio " << ac.tail_increment_ratio << ") - "
                << ac.interpretation << "\n";
    }
    sink.report["results"]["ac_diagnostics"] = ac_docs;

    sink.summary = summary.str();
    sink.flush(options);
    return 0;
}

// --- theorem1-demo ----------------------------------------------------------------------

int run_theorem1_demo(const RunOptions& options) {
    apply_kernel_choice(options);
    const ordered_json config = load_config(options.config_path);

    const ProgressionSequence sequence =
        parse_sequence(require_key(config, "", "sequence"), "sequence");
    const SamplingConfig sampling = parse_sampling(config, "", options);
    const double tail_fraction = optional_number(config, "", "tail_fraction", 0.3);
    const double epsilon = optional_number(config, "", "epsilon", 0.05);

    // Deterministic side: a circle rotation with an arc partition.
    const auto& rot_doc = require_key(config, "", "rotation");
    const RotationSystem rotation(
        parse_real50(require_string(rot_doc, "rotation", "angle"), "rotation.angle"));
    std::vector<Real50> breaks;
    if (rot_doc.contains("breakpoints")) {
        for (const auto& b : require_array(rot_doc, "rotation", "breakpoints"))
            breaks.push_back(parse_real50(b.get<std::string>(), "rotation.breakpoints"));
    } else {
        breaks = {Real50(0), Real50(1) / 2};
    }
    const ArcPartition arcs("two_arcs", breaks);

    // Gaussian side.
    const auto& gauss_doc = require_key(config, "", "gaussian");
    SpectralMeasure sigma =
        parse_measure(require_key(gauss_doc, "gaussian", "measure"), "gaussian.measure");
    const std::int64_t horizon = sequence_max_p(sequence) + 16;
    auto sampler =
        std::make_shared<const GaussianTrajectorySampler>(std::move(sigma), horizon, 64);
    const GaussianSystem gaussian(sampler);
    std::vector<std::unique_ptr<SystemPartition>> cylinders;
    if (gauss_doc.contains("cylinders")) {
        std::size_t idx = 0;
        for (const auto& c : require_array(gauss_doc, "gaussian", "cylinders")) {
            const std::string path = "gaussian.cylinders[" + std::to_string(idx) + "]";
            const std::string type = optional_string(c, path, "type", "sign");
            if (type == "sign")
                cylinders.push_back(std::make_unique<CylinderPartition>(
                    CylinderPartition::sign(*sampler, require_int(c, path, "coord"))));
            else if (type == "quantiles")
                cylinders.push_back(std::make_unique<CylinderPartition>(
                    CylinderPartition::quantiles(
                        *sampler, require_int(c, path, "coord"),
                        static_cast<int>(require_int(c, path, "cells")))));
            else
                throw ConfigError(path + ".type", "expected sign|quantiles");
            ++idx;
        }
    } else {
        cylinders.push_back(
            std::make_unique<CylinderPartition>(CylinderPartition::sign(*sampler, 0)));
        cylinders.push_back(std::make_unique<CylinderPartition>(
            CylinderPartition::quantiles(*sampler, 0, 3)));
    }

    ReportSink sink;
    sink.dir = options.out_dir;
    sink.report =
        ordered_json{{"meta", make_meta("theorem1-demo", config)}, {"config", config}};
    std::ostringstream summary;
    summary << "# pentropy theorem1-demo (" << timestamp_utc() << ")\n";
    summary << "shared progression sequence with " << sequence.size() << " entries\n\n";

    // Deterministic system: exact joins at every entry.
    EstimationMode exact_mode;
    exact_mode.prefer_exact = true;
    const PEntropyReport s_report =
        h_p(rotation, arcs, sequence, tail_fraction, exact_mode, false);
    sink.per_j_csv += s_report.to_csv_rows();
    sink.report["results"]["deterministic"] = ordered_json(s_report.to_json());
    summary << "deterministic rotation: H(xi) = " << s_report.partition_entropy
            << ", tail max h_j = " << s_report.h_p_estimate << " (target < " << epsilon
            << ")\n";

    // Gaussian system: sampled joins wherever the support cap allows.
    EstimationMode sampled_mode;
    sampled_mode.prefer_exact = false;
    sampled_mode.plan.n_samples = sampling.samples;
    sampled_mode.plan.seed = sampling.seed;
    sampled_mode.plan.support_cap = sampling.support_cap;

    ordered_json gauss_reports = ordered_json::array();
    bool contrast_ok = s_report.h_p_estimate < epsilon;
    summary << "\nGaussian side (" << sampling.samples << " samples per join):\n";
    for (const auto& cyl : cylinders) {
        const PEntropyReport g_report =
            h_p(gaussian, *cyl, sequence, tail_fraction, sampled_mode, true);
        sink.per_j_csv += g_report.to_csv_rows();
        gauss_reports.push_back(ordered_json(g_report.to_json()));
        const double h_xi = g_report.partition_entropy;
        double min_ratio = 2.0;
        double min_h = 0.0, min_se = 0.0;
        std::int64_t min_j = 0;
        bool any = false;
        for (const auto& row : g_report.per_j) {
            if (row.method != JoinMethod::sampled) continue;
            any = true;
            const double ratio = row.h_value / h_xi;
            if (ratio < min_ratio) {
                min_ratio = ratio;
                min_h = row.h_value;
                min_se = row.std_error;
                min_j = row.j;
            }
        }
        const bool ok = any && min_h + 3 * min_se >= 0.9 * h_xi;
        contrast_ok = contrast_ok && ok;
        summary << "  " << cyl->id() << ": H(xi) = " << h_xi
                << ", min computed h_j = " << min_h << " (j=" << min_j << ", stderr "
                << min_se << "), ratio " << min_ratio << (ok ? "  [>= 0.9 H]" : "  [BELOW]")
                << "\n";
    }
    sink.report["results"]["gaussian"] = gauss_reports;
    sink.report["results"]["contrast_holds"] = contrast_ok;
    summary << "\ncontrast: deterministic tail h_j < " << epsilon
            << " while the Gaussian side keeps h_j at H(xi): "
            << (contrast_ok ? "HOLDS" : "FAILS") << "\n";

    sink.summary = summary.str();
    sink.flush(options);
    return 0;
}

}  // namespace pentropy::cli
