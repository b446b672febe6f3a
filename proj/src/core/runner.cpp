#include "runner.hpp"

#include <cmath>
#include <fstream>

#include "agent.hpp"
#include "field_io.hpp"
#include "metrics.hpp"
#include "plot.hpp"
#include "probe.hpp"
#include "report.hpp"
#include "rng.hpp"

namespace flowcast {

namespace {

namespace fs = std::filesystem;

struct RunContext {
    RunConfig cfg;
    fs::path out_dir;
    bool has_out_dir = false;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    void note_input(const std::string& path) { inputs.push_back(path); }
    fs::path out_path(const std::string& name) {
        outputs.push_back(name);
        return out_dir / name;
    }
};

GridSpec grid_from_config(const RunConfig& cfg) {
    const int n = static_cast<int>(cfg.get_int("grid", 64));
    const double lx = cfg.get_double("domain", 2.0 * M_PI);
    return GridSpec(n, n, lx, lx);
}

SimulatorConfig sim_from_config(const RunConfig& cfg) {
    SimulatorConfig sim;
    sim.viscosity = cfg.get_double("viscosity", 0.01);
    sim.dt = cfg.get_double("dt", 1e-3);
    sim.steps_per_output = static_cast<int>(cfg.get_int("steps_per_output", 10));
    sim.dealias = cfg.get_bool("dealias", true);
    sim.forcing = SimulatorConfig::parse_forcing(cfg.get_string("forcing", "none"));
    sim.seed = static_cast<uint64_t>(cfg.get_int("seed", 42));
    sim.latent_modes = static_cast<int>(cfg.get_int("latent_modes", 0));
    return sim;
}

ScalarField random_band_field(const GridSpec& grid, uint64_t seed) {
    Rng rng(seed);
    ScalarField f(grid, "vorticity", "1/s");
    struct Mode {
        int m, n;
        double amp, px, py;
    };
    std::vector<Mode> modes;
    for (int m = 0; m <= 4; ++m) {
        for (int n = 0; n <= 4; ++n) {
            if (m == 0 && n == 0) continue;
            modes.push_back({m, n, (rng.next_double() - 0.5) * 2.0 / (1.0 + m + n),
                             2.0 * M_PI * rng.next_double(), 2.0 * M_PI * rng.next_double()});
        }
    }
    for (int i = 0; i < grid.height; ++i) {
        for (int j = 0; j < grid.width; ++j) {
            double v = 0.0;
            for (const auto& mode : modes) {
                v += mode.amp *
                     std::cos(mode.m * 2.0 * M_PI * grid.x(j) / grid.length_x + mode.px) *
                     std::cos(mode.n * 2.0 * M_PI * grid.y(i) / grid.length_y + mode.py);
            }
            f.at(i, j) = v;
        }
    }
    return f;
}

FlowState demo_weather_state(const GridSpec& grid) {
    FlowState state;
    ScalarField wave(grid, "wave_height", "m");
    ScalarField temperature(grid, "temperature", "K");
    const double cx = grid.length_x * 0.4, cy = grid.length_y * 0.55;
    for (int i = 0; i < grid.height; ++i) {
        for (int j = 0; j < grid.width; ++j) {
            const double x = grid.x(j), y = grid.y(i);
            const double dx = std::remainder(x - cx, grid.length_x);
            const double dy = std::remainder(y - cy, grid.length_y);
            const double storm = std::exp(-(dx * dx + dy * dy) / (2.0 * 0.6 * 0.6));
            wave.at(i, j) = 1.2 + 4.0 * storm + 0.3 * std::sin(2.0 * x) * std::cos(y);
            temperature.at(i, j) = 288.0 + 6.0 * std::sin(y) - 10.0 * storm;
        }
    }
    // Pin the storm peak so alert demos have a definite maximum.
    wave.at(static_cast<int>(grid.height * 0.55), static_cast<int>(grid.width * 0.4)) = 5.2;
    state.add_channel(std::move(wave));
    state.add_channel(std::move(temperature));
    return state;
}

FlowState initial_state(RunContext& ctx) {
    const GridSpec grid = grid_from_config(ctx.cfg);
    const std::string init = ctx.cfg.get_string("init", "taylor_green");
    FlowState state;
    if (init == "taylor_green") {
        ScalarField omega(grid, "vorticity", "1/s");
        for (int i = 0; i < grid.height; ++i) {
            for (int j = 0; j < grid.width; ++j) {
                omega.at(i, j) = 2.0 * std::sin(grid.x(j)) * std::sin(grid.y(i));
            }
        }
        state.add_channel(std::move(omega));
    } else if (init == "gaussian_vortex") {
        ScalarField omega(grid, "vorticity", "1/s");
        const double cx = grid.length_x / 2.0, cy = grid.length_y / 2.0;
        const double sigma = grid.length_x / 12.0;
        for (int i = 0; i < grid.height; ++i) {
            for (int j = 0; j < grid.width; ++j) {
                const double dx = std::remainder(grid.x(j) - cx, grid.length_x);
                const double dy = std::remainder(grid.y(i) - cy, grid.length_y);
                omega.at(i, j) = 3.0 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
            }
        }
        state.add_channel(std::move(omega));
    } else if (init == "random") {
        state.add_channel(random_band_field(grid, static_cast<uint64_t>(ctx.cfg.get_int("seed", 42))));
    } else if (init == "demo_weather") {
        state = demo_weather_state(grid);
    } else if (init.rfind("field:", 0) == 0) {
        const std::string stem = init.substr(6);
        ctx.note_input(stem);
        state.add_channel(load_field(stem));
    } else {
        throw config_error("unknown init '" + init +
                           "' (taylor_green, gaussian_vortex, random, demo_weather, field:<stem>)");
    }
    return state;
}

void write_manifest(RunContext& ctx, const std::string& command) {
    nlohmann::ordered_json manifest;
    manifest["command"] = command;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ctx.cfg.entries()) config[k] = v;
    manifest["config"] = std::move(config);
    manifest["config_hash"] = ctx.cfg.hash_hex();
    manifest["seed"] = ctx.cfg.get_int("seed", 42);
    manifest["inputs"] = ctx.inputs;
    manifest["outputs"] = ctx.outputs;
    std::ofstream out(ctx.out_dir / "manifest.json");
    if (!out) throw runtime_error("cannot write manifest in '" + ctx.out_dir.string() + "'");
    out << manifest.dump(2) << "\n";
}

std::string step_stem(const std::string& prefix, int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s_%04d", prefix.c_str(), index);
    return buf;
}

void save_state_files(RunContext& ctx, const FlowState& state, const std::string& stem) {
    for (const auto& ch : state.channels()) {
        const std::string name = stem + "_" + ch.variable();
        save_field(ch, ctx.out_path(name), state.time());
        ctx.outputs.pop_back();  // save_field writes .bin + .json under one stem
        ctx.outputs.push_back(name + ".bin");
        ctx.outputs.push_back(name + ".json");
    }
}

// Loads the trajectory written by a previous simulate/ensemble run.
std::vector<ScalarField> load_trajectory(const fs::path& run_dir, const std::string& prefix,
                                         const std::string& channel) {
    std::ifstream in(run_dir / "manifest.json");
    if (!in) throw runtime_error("no manifest.json in '" + run_dir.string() + "'");
    auto manifest = nlohmann::ordered_json::parse(in);
    std::vector<ScalarField> fields;
    for (const auto& name : manifest.at("outputs")) {
        const std::string s = name.get<std::string>();
        const std::string suffix = "_" + channel + ".json";
        if (s.rfind(prefix + "_", 0) == 0 && s.size() > suffix.size() &&
            s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0) {
            fields.push_back(load_field(run_dir / s.substr(0, s.size() - 5)));
        }
    }
    if (fields.empty()) {
        throw runtime_error("run '" + run_dir.string() + "' holds no '" + prefix + "_*_" + channel +
                            "' fields");
    }
    return fields;
}

FlowState load_final_state(const fs::path& run_dir) {
    std::ifstream in(run_dir / "manifest.json");
    if (!in) throw runtime_error("no manifest.json in '" + run_dir.string() + "'");
    auto manifest = nlohmann::ordered_json::parse(in);
    // Latest state stem in the run, preferring ensemble means over raw steps.
    std::string best_mean, best_step;
    for (const auto& name : manifest.at("outputs")) {
        const std::string s = name.get<std::string>();
        if (s.size() < 5 || s.compare(s.size() - 5, 5, ".json") != 0) continue;
        const size_t channel_sep = s.rfind('_');
        if (channel_sep == std::string::npos) continue;
        const std::string stem = s.substr(0, channel_sep);
        if (stem.rfind("mean_", 0) == 0) best_mean = std::max(best_mean, stem);
        if (stem.rfind("step_", 0) == 0) best_step = std::max(best_step, stem);
    }
    const std::string best_stem = best_mean.empty() ? best_step : best_mean;
    if (best_stem.empty()) throw runtime_error("run '" + run_dir.string() + "' holds no state files");

    FlowState state;
    for (const auto& name : manifest.at("outputs")) {
        const std::string s = name.get<std::string>();
        if (s.rfind(best_stem + "_", 0) == 0 && s.size() > 5 &&
            s.compare(s.size() - 5, 5, ".json") == 0) {
            double t = 0.0;
            state.add_channel(load_field(run_dir / s.substr(0, s.size() - 5), &t));
            state.set_time(t);
        }
    }
    return state;
}

KnowledgeStore open_store(RunContext& ctx, const Embedder& embedder) {
    if (ctx.cfg.has("store")) {
        const std::string stem = ctx.cfg.require_string("store");
        ctx.note_input(stem);
        return KnowledgeStore::load(stem);
    }
    if (ctx.cfg.has("corpus")) {
        const fs::path root = ctx.cfg.require_string("corpus");
        ctx.note_input(root.string());
        KnowledgeStore store;
        for (const auto& [name, partition] :
             {std::pair{"phy", Partition::phy}, {"prot", Partition::prot}, {"hist", Partition::hist}}) {
            const fs::path dir = root / name;
            if (fs::exists(dir)) store.ingest_directory(dir, partition, embedder);
        }
        return store;
    }
    throw config_error("this command needs either 'corpus' (directory with phy/ prot/ hist/) or 'store'");
}

EpisodeConfig episode_from_config(const RunConfig& cfg) {
    EpisodeConfig ep;
    ep.max_steps = static_cast<int>(cfg.get_int("max_steps", 8));
    ep.rollback_limit = static_cast<int>(cfg.get_int("rollback_limit", 3));
    ep.uncertainty_threshold = cfg.get_double("uncertainty_threshold", 0.5);
    ep.uncertainty_decay = cfg.get_double("uncertainty_decay", 1.0);
    ep.history_char_budget = static_cast<size_t>(cfg.get_int("history_budget", 4000));
    ep.retrieval_k = static_cast<int>(cfg.get_int("k", 3));
    ep.ensemble_size = static_cast<int>(cfg.get_int("ensemble_size", 8));
    ep.perturbation = cfg.get_double("perturbation", 0.02);
    ep.forecast_outputs = static_cast<int>(cfg.get_int("outputs", 2));
    if (cfg.has("system_instruction")) ep.system_instruction = cfg.require_string("system_instruction");
    ep.constraints.divergence_tolerance = cfg.get_double("div_tol", 1e-8);
    ep.constraints.enstrophy_monotone = cfg.get_bool("enstrophy_monotone", true);
    ep.config_hash = cfg.hash_hex();
    return ep;
}

ReportOptions report_options_from_config(const RunConfig& cfg) {
    ReportOptions options;
    // report_units = variable:unit[,variable:unit...]
    const std::string spec = cfg.get_string("report_units", "");
    size_t pos = 0;
    while (pos < spec.size()) {
        size_t comma = spec.find(',', pos);
        if (comma == std::string::npos) comma = spec.size();
        const std::string item = spec.substr(pos, comma - pos);
        const size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw config_error("report_units expects variable:unit pairs, got '" + item + "'");
        }
        options.unit_preferences[item.substr(0, colon)] = item.substr(colon + 1);
        pos = comma + 1;
    }
    return options;
}

Intervention intervention_from_config(RunContext& ctx) {
    if (ctx.cfg.has("intervention")) {
        const std::string path = ctx.cfg.require_string("intervention");
        std::ifstream in(path);
        if (!in) throw config_error("cannot open intervention file '" + path + "'");
        ctx.note_input(path);
        return Intervention::from_json(nlohmann::json::parse(in));
    }
    nlohmann::json doc;
    doc["channel"] = ctx.cfg.get_string("intervention_channel", "vorticity");
    doc["op"] = ctx.cfg.get_string("intervention_op", "scale");
    doc["amount"] = ctx.cfg.get_double("intervention_amount", 0.5);
    if (ctx.cfg.has("intervention_label")) doc["label"] = ctx.cfg.require_string("intervention_label");
    if (ctx.cfg.has("intervention_region")) {
        // row0:col0:rows:cols
        const std::string region = ctx.cfg.require_string("intervention_region");
        int parts[4] = {0, 0, 0, 0};
        size_t pos = 0;
        for (int i = 0; i < 4; ++i) {
            const size_t colon = region.find(':', pos);
            const std::string tok =
                region.substr(pos, colon == std::string::npos ? std::string::npos : colon - pos);
            try {
                parts[i] = std::stoi(tok);
            } catch (const std::exception&) {
                throw config_error("intervention_region expects row0:col0:rows:cols");
            }
            if (i < 3) {
                if (colon == std::string::npos) {
                    throw config_error("intervention_region expects row0:col0:rows:cols");
                }
                pos = colon + 1;
            }
        }
        doc["region"] = {{"row0", parts[0]}, {"col0", parts[1]}, {"rows", parts[2]}, {"cols", parts[3]}};
    }
    return Intervention::from_json(doc);
}

nlohmann::ordered_json stats_json(const FlowState& state) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& ch : state.channels()) {
        const auto s = field_stats(ch);
        arr.push_back({{"variable", ch.variable()},
                       {"unit", ch.unit()},
                       {"mean", s.mean},
                       {"min", s.min},
                       {"max", s.max},
                       {"std", s.std_dev}});
    }
    return arr;
}

RunOutcome run_simulate(RunContext& ctx) {
    auto sim = sim_from_config(ctx.cfg);
    auto state = initial_state(ctx);
    const int outputs = static_cast<int>(ctx.cfg.get_int("outputs", 10));

    save_state_files(ctx, state, "step_0000");
    if (outputs > 0) {
        auto trajectory = rollout(state, outputs, sim);
        for (int n = 0; n < outputs; ++n) {
            save_state_files(ctx, trajectory[static_cast<size_t>(n)], step_stem("step", n + 1));
        }
        if (ctx.cfg.get_bool("csv", false)) {
            export_csv(trajectory.back().channel("vorticity"), ctx.out_path("final_vorticity.csv"));
        }
        if (ctx.cfg.get_bool("plots", false)) {
            write_png(trajectory.back().channel("vorticity"), ctx.out_path("final_vorticity.png"));
        }
        RunOutcome outcome;
        outcome.summary = {{"command", "simulate"},
                           {"outputs", outputs},
                           {"final_time", trajectory.back().time()},
                           {"final_stats", stats_json(trajectory.back())}};
        return outcome;
    }
    RunOutcome outcome;
    outcome.summary = {{"command", "simulate"}, {"outputs", 0}, {"final_stats", stats_json(state)}};
    return outcome;
}

RunOutcome run_ensemble(RunContext& ctx) {
    auto sim = sim_from_config(ctx.cfg);
    auto state = initial_state(ctx);
    const int outputs = static_cast<int>(ctx.cfg.get_int("outputs", 5));
    const int members = static_cast<int>(ctx.cfg.get_int("ensemble_size", 8));
    const double perturbation = ctx.cfg.get_double("perturbation", 0.02);

    auto forecast = ensemble_rollout(state, members, perturbation, outputs, sim);
    for (int n = 0; n < outputs; ++n) {
        save_state_files(ctx, forecast.mean_trajectory[static_cast<size_t>(n)], step_stem("mean", n + 1));
        save_state_files(ctx, forecast.spread_trajectory[static_cast<size_t>(n)],
                         step_stem("spread", n + 1));
    }
    if (ctx.cfg.get_bool("save_members", false)) {
        for (int k = 0; k < members; ++k) {
            save_state_files(ctx, forecast.members[static_cast<size_t>(k)].outputs.back(),
                             step_stem("member", k));
        }
    }
    if (ctx.cfg.get_bool("plots", false)) {
        write_png(forecast.mean_trajectory.back().channel("vorticity"), ctx.out_path("mean_final.png"));
        write_png(forecast.spread_trajectory.back().channel("vorticity"),
                  ctx.out_path("spread_final.png"));
    }
    const auto spread_stats = field_stats(forecast.spread_trajectory.back().channel("vorticity"));
    RunOutcome outcome;
    outcome.summary = {{"command", "ensemble"},
                       {"members", members},
                       {"perturbation", perturbation},
                       {"outputs", outputs},
                       {"final_spread_mean", spread_stats.mean},
                       {"final_spread_max", spread_stats.max},
                       {"member_seeds", [&] {
                            auto arr = nlohmann::ordered_json::array();
                            for (const auto& m : forecast.members) arr.push_back(m.seed);
                            return arr;
                        }()}};
    return outcome;
}

RunOutcome run_probe(RunContext& ctx) {
    auto sim = sim_from_config(ctx.cfg);
    auto state = initial_state(ctx);
    auto intervention = intervention_from_config(ctx);
    const int outputs = static_cast<int>(ctx.cfg.get_int("outputs", 2));
    const int members = static_cast<int>(ctx.cfg.get_int("ensemble_size", 8));
    const double perturbation = ctx.cfg.get_double("perturbation", 0.02);

    auto result = counterfactual_rollout(state, intervention, members, perturbation, outputs, sim);
    save_field(result.delta, ctx.out_path("delta_" + result.channel));
    ctx.outputs.pop_back();
    ctx.outputs.push_back("delta_" + result.channel + ".bin");
    ctx.outputs.push_back("delta_" + result.channel + ".json");

    nlohmann::ordered_json probe_doc = {{"intervention", intervention.to_json()},
                                        {"channel", result.channel},
                                        {"sensitivity", result.sensitivity},
                                        {"mean_abs_delta", result.mean_abs_delta},
                                        {"mean_spread", result.mean_spread}};
    std::ofstream out(ctx.out_path("probe.json"));
    out << probe_doc.dump(2) << "\n";
    if (ctx.cfg.get_bool("plots", false)) {
        write_png(result.delta, ctx.out_path("delta.png"));
    }
    RunOutcome outcome;
    outcome.summary = probe_doc;
    outcome.summary["command"] = "probe";
    return outcome;
}

RunOutcome run_retrieve(RunContext& ctx) {
    auto embedder = make_embedder(ctx.cfg.get_string("embedder", "hash:256:7"));
    auto store = open_store(ctx, *embedder);
    const std::string query = ctx.cfg.require_string("query");
    const int k = static_cast<int>(ctx.cfg.get_int("k", 3));
    const std::string partition_name_str = ctx.cfg.get_string("partition", "all");
    std::optional<Partition> filter;
    if (partition_name_str != "all") filter = parse_partition(partition_name_str);

    auto result = store.query(query, k, *embedder, filter);
    auto ranked = nlohmann::ordered_json::array();
    for (const auto& hit : result.ranked) {
        ranked.push_back({{"id", hit.id},
                          {"score", hit.score},
                          {"partition", partition_name(store.chunk_by_id(hit.id).partition)},
                          {"text", store.chunk_by_id(hit.id).text}});
    }
    RunOutcome outcome;
    outcome.summary = {{"command", "retrieve"},
                       {"query", query},
                       {"k", k},
                       {"partition", partition_name_str},
                       {"chunks", store.size()},
                       {"ranked", ranked}};
    if (ctx.has_out_dir) {
        std::ofstream out(ctx.out_path("retrieval.json"));
        out << outcome.summary.dump(2) << "\n";
        if (ctx.cfg.has("save_store")) {
            const std::string stem = ctx.cfg.require_string("save_store");
            store.save(ctx.out_dir / stem);
            ctx.outputs.push_back(stem + ".bin");
            ctx.outputs.push_back(stem + ".json");
        }
        write_manifest(ctx, "retrieve");
    }
    return outcome;
}

RunOutcome run_agent(RunContext& ctx) {
    auto embedder = make_embedder(ctx.cfg.get_string("embedder", "hash:256:7"));
    auto store = open_store(ctx, *embedder);
    auto policy = make_policy(ctx.cfg.get_string("policy", "scripted:golden"));
    const auto fault = parse_fault_injection(ctx.cfg.get_string("fault", "none"));

    EpisodeInputs inputs;
    inputs.initial_state = initial_state(ctx);
    inputs.store = &store;
    inputs.embedder = embedder.get();
    inputs.sim = sim_from_config(ctx.cfg);
    auto episode_cfg = episode_from_config(ctx.cfg);

    auto result = run_episode(inputs, episode_cfg, *policy, fault);

    {
        std::ofstream out(ctx.out_path("trace.json"));
        out << result.trace.to_json().dump(2) << "\n";
    }
    auto report = build_report(result, &store, *policy, report_options_from_config(ctx.cfg));
    auto rendered = render_report(report);
    {
        std::ofstream out(ctx.out_path("report.md"));
        out << rendered.markdown;
    }
    {
        std::ofstream out(ctx.out_path("report.json"));
        out << rendered.sidecar.dump(2) << "\n";
    }
    if (ctx.cfg.get_bool("plots", false) && !result.mean_trajectory.empty() &&
        result.mean_trajectory.back().has_channel("vorticity")) {
        write_png(result.mean_trajectory.back().channel("vorticity"), ctx.out_path("mean_final.png"));
        if (result.spread_state) {
            write_png(result.spread_state->channel("vorticity"), ctx.out_path("spread_final.png"));
        }
    }

    RunOutcome outcome;
    outcome.exit_code = result.status == EpisodeStatus::failed ? 4 : 0;
    outcome.summary = {{"command", "agent-run"},
                       {"episode_id", result.trace.episode_id},
                       {"status", episode_status_name(result.status)},
                       {"steps", [&] {
                            int actions = 0;
                            for (const auto& n : result.trace.nodes) actions += n.action ? 1 : 0;
                            return actions;
                        }()},
                       {"rollbacks", result.trace.rollbacks.size()},
                       {"alerts", report.alerts.size()}};
    return outcome;
}

RunOutcome run_report(RunContext& ctx) {
    auto embedder = make_embedder(ctx.cfg.get_string("embedder", "hash:256:7"));
    auto store = open_store(ctx, *embedder);
    auto policy = make_policy(ctx.cfg.get_string("policy", "scripted:golden"));

    EpisodeResult pseudo;
    if (ctx.cfg.has("run")) {
        const fs::path run_dir = ctx.cfg.require_string("run");
        ctx.note_input(run_dir.string());
        pseudo.mean_trajectory.push_back(load_final_state(run_dir));
    } else {
        pseudo.mean_trajectory.push_back(initial_state(ctx));
    }
    try {
        pseudo.descriptors = extract_topology(pseudo.mean_trajectory.back());
        pseudo.rendered_tokens = render_descriptors(pseudo.descriptors);
    } catch (const Error&) {
        pseudo.rendered_tokens = "no salient structures detected";
    }
    pseudo.status = EpisodeStatus::finalized;
    pseudo.trace.episode_id = "report-" + ctx.cfg.hash_hex();
    pseudo.trace.seed = static_cast<uint64_t>(ctx.cfg.get_int("seed", 42));
    pseudo.trace.config_hash = ctx.cfg.hash_hex();

    auto report = build_report(pseudo, &store, *policy, report_options_from_config(ctx.cfg));
    auto rendered = render_report(report);
    {
        std::ofstream out(ctx.out_path("report.md"));
        out << rendered.markdown;
    }
    {
        std::ofstream out(ctx.out_path("report.json"));
        out << rendered.sidecar.dump(2) << "\n";
    }
    if (ctx.cfg.get_bool("plots", false)) {
        for (const auto& ch : pseudo.mean_trajectory.back().channels()) {
            write_png(ch, ctx.out_path("state_" + ch.variable() + ".png"));
        }
    }
    RunOutcome outcome;
    outcome.summary = {{"command", "report"},
                       {"alerts", report.alerts.size()},
                       {"variables", report.statistical_overview.size()}};
    return outcome;
}

RunOutcome run_evaluate(RunContext& ctx) {
    const fs::path pred_dir = ctx.cfg.require_string("pred");
    const fs::path ref_dir = ctx.cfg.require_string("ref");
    ctx.note_input(pred_dir.string());
    ctx.note_input(ref_dir.string());
    const std::string channel = ctx.cfg.get_string("channel", "vorticity");
    const std::string pred_prefix = ctx.cfg.get_string("pred_prefix", "step");
    const std::string ref_prefix = ctx.cfg.get_string("ref_prefix", "step");

    auto pred = load_trajectory(pred_dir, pred_prefix, channel);
    auto ref = load_trajectory(ref_dir, ref_prefix, channel);
    std::optional<double> range;
    if (ctx.cfg.has("data_range")) range = ctx.cfg.get_double("data_range", 0.0);
    auto report = evaluate_rollout(pred, ref, range, ctx.cfg.get_double("denorm_scale", 1.0),
                                   ctx.cfg.get_double("denorm_offset", 0.0));

    {
        std::ofstream csv(ctx.out_path("metrics.csv"));
        csv << "step,rmse,ssim,psnr\n";
        csv.precision(17);
        for (size_t i = 0; i < report.rmse_per_step.size(); ++i) {
            csv << i << "," << report.rmse_per_step[i] << "," << report.ssim_per_step[i] << ",";
            if (std::isinf(report.psnr_per_step[i])) {
                csv << "inf";
            } else {
                csv << report.psnr_per_step[i];
            }
            csv << "\n";
        }
    }
    nlohmann::ordered_json summary = {{"command", "evaluate"},
                                      {"channel", channel},
                                      {"steps", report.rmse_per_step.size()},
                                      {"rmse", report.rmse},
                                      {"ssim", report.ssim},
                                      {"psnr_infinite", report.psnr_infinite},
                                      {"data_range", report.data_range}};
    if (!report.psnr_infinite) summary["psnr"] = report.psnr;
    {
        std::ofstream out(ctx.out_path("metrics.json"));
        out << summary.dump(2) << "\n";
    }
    RunOutcome outcome;
    outcome.summary = std::move(summary);
    return outcome;
}

RunOutcome run_train_projector(RunContext& ctx) {
    const int grid_n = static_cast<int>(ctx.cfg.get_int("proj_grid", 32));
    const GridSpec grid(grid_n, grid_n);
    const int tokens = static_cast<int>(ctx.cfg.get_int("proj_tokens", 4));
    const int dim = static_cast<int>(ctx.cfg.get_int("proj_dim", 32));
    const int patch = static_cast<int>(ctx.cfg.get_int("proj_patch", 8));
    const int embed_dim = static_cast<int>(ctx.cfg.get_int("proj_embed_dim", 16));
    const double temperature = ctx.cfg.get_double("contrastive_temperature", 0.07);
    const int steps = static_cast<int>(ctx.cfg.get_int("train_steps", 200));
    const double lr = ctx.cfg.get_double("learning_rate", 1e-2);
    const uint64_t seed = static_cast<uint64_t>(ctx.cfg.get_int("seed", 42));

    auto set = make_synthetic_descriptor_set(grid, static_cast<int>(ctx.cfg.get_int("samples_per_class", 8)),
                                             dim, seed);
    auto params = ProjectorParams::random_init(tokens, dim, embed_dim, patch, seed + 1, temperature);
    auto result = train_projector(params, set, steps, lr);

    params.save(ctx.out_path("projector"));
    ctx.outputs.pop_back();
    ctx.outputs.push_back("projector.bin");
    ctx.outputs.push_back("projector.json");
    {
        std::ofstream csv(ctx.out_path("loss.csv"));
        csv << "step,loss\n";
        csv.precision(17);
        for (size_t i = 0; i < result.loss_history.size(); ++i) {
            csv << i << "," << result.loss_history[i] << "\n";
        }
    }
    RunOutcome outcome;
    outcome.summary = {{"command", "train-projector"},
                       {"steps", steps},
                       {"initial_loss", result.initial_loss},
                       {"final_loss", result.final_loss},
                       {"reduction", 1.0 - result.final_loss / result.initial_loss}};
    return outcome;
}

}  // namespace

RunOutcome run_command(const RunRequest& request) {
    RunContext ctx;
    if (request.config_file) {
        ctx.cfg.merge_file(*request.config_file);
        ctx.note_input(request.config_file->string());
    }
    ctx.cfg.apply_overrides(request.overrides);

    const bool needs_out_dir = request.command != "retrieve";
    if (request.out_dir) {
        ctx.out_dir = *request.out_dir;
        ctx.has_out_dir = true;
        std::filesystem::create_directories(ctx.out_dir);
    } else if (needs_out_dir) {
        throw usage_error("command '" + request.command + "' requires an output directory");
    }

    RunOutcome outcome;
    if (request.command == "simulate") {
        outcome = run_simulate(ctx);
    } else if (request.command == "ensemble") {
        outcome = run_ensemble(ctx);
    } else if (request.command == "probe") {
        outcome = run_probe(ctx);
    } else if (request.command == "retrieve") {
        return run_retrieve(ctx);  // writes its own manifest when out_dir is set
    } else if (request.command == "agent-run") {
        outcome = run_agent(ctx);
    } else if (request.command == "report") {
        outcome = run_report(ctx);
    } else if (request.command == "evaluate") {
        outcome = run_evaluate(ctx);
    } else if (request.command == "train-projector") {
        outcome = run_train_projector(ctx);
    } else {
        throw usage_error("unknown command '" + request.command + "'");
    }
    if (ctx.has_out_dir) write_manifest(ctx, request.command);
    return outcome;
}

}  // namespace flowcast
