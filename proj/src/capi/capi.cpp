#include "flowcast/flowcast.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "error.hpp"
#include "field_io.hpp"
#include "grid.hpp"
#include "json.hpp"
#include "knowledge.hpp"
#include "runner.hpp"
#include "spectral.hpp"
#include "units.hpp"

namespace {

thread_local std::string g_last_error;

struct StoreHandle {
    std::unique_ptr<flowcast::Embedder> embedder;
    flowcast::KnowledgeStore store;
};

flowcast::ScalarField* unwrap(fc_field* f) { return reinterpret_cast<flowcast::ScalarField*>(f); }
const flowcast::ScalarField* unwrap(const fc_field* f) {
    return reinterpret_cast<const flowcast::ScalarField*>(f);
}
fc_field* wrap(flowcast::ScalarField* f) { return reinterpret_cast<fc_field*>(f); }

StoreHandle* unwrap(fc_store* s) { return reinterpret_cast<StoreHandle*>(s); }
const StoreHandle* unwrap(const fc_store* s) { return reinterpret_cast<const StoreHandle*>(s); }

fc_status status_of(const flowcast::Error& e) {
    switch (e.kind()) {
        case flowcast::ErrorKind::usage: return FC_USAGE_ERROR;
        case flowcast::ErrorKind::config: return FC_CONFIG_ERROR;
        case flowcast::ErrorKind::runtime: return FC_RUNTIME_ERROR;
        case flowcast::ErrorKind::physics: return FC_PHYSICS_FAILURE;
    }
    return FC_RUNTIME_ERROR;
}

template <typename Fn>
fc_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const flowcast::Error& e) {
        g_last_error = e.what();
        return status_of(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return FC_RUNTIME_ERROR;
    } catch (...) {
        g_last_error = "unknown failure";
        return FC_RUNTIME_ERROR;
    }
}

fc_status invalid_argument(const char* message) {
    g_last_error = message;
    return FC_USAGE_ERROR;
}

char* copy_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

}  // namespace

extern "C" {

const char* fc_version(void) { return "0.1.0"; }

const char* fc_last_error(void) { return g_last_error.c_str(); }

void fc_string_free(char* text) { std::free(text); }

fc_status fc_field_create(int height, int width, double length_x, double length_y,
                          const char* variable, const char* unit, const double* values,
                          fc_field** out) {
    if (!out || !variable || !unit) return invalid_argument("fc_field_create: null argument");
    return guarded([&] {
        flowcast::GridSpec grid(height, width, length_x, length_y);
        auto field = std::make_unique<flowcast::ScalarField>(grid, variable, unit);
        if (values) {
            std::memcpy(field->values().data(), values,
                        static_cast<size_t>(grid.cells()) * sizeof(double));
            field->require_finite("fc_field_create");
        }
        *out = wrap(field.release());
        return FC_OK;
    });
}

fc_status fc_field_load(const char* stem, fc_field** out) {
    if (!out || !stem) return invalid_argument("fc_field_load: null argument");
    return guarded([&] {
        auto field = std::make_unique<flowcast::ScalarField>(flowcast::load_field(stem));
        *out = wrap(field.release());
        return FC_OK;
    });
}

fc_status fc_field_save(const fc_field* field, const char* stem) {
    if (!field || !stem) return invalid_argument("fc_field_save: null argument");
    return guarded([&] {
        flowcast::save_field(*unwrap(field), stem);
        return FC_OK;
    });
}

fc_status fc_field_shape(const fc_field* field, int* height, int* width) {
    if (!field || !height || !width) return invalid_argument("fc_field_shape: null argument");
    *height = unwrap(field)->grid().height;
    *width = unwrap(field)->grid().width;
    return FC_OK;
}

fc_status fc_field_values(const fc_field* field, const double** values) {
    if (!field || !values) return invalid_argument("fc_field_values: null argument");
    *values = unwrap(field)->values().data();
    return FC_OK;
}

fc_status fc_field_stats(const fc_field* field, double* mean, double* min, double* max,
                         double* std_dev) {
    if (!field) return invalid_argument("fc_field_stats: null field");
    return guarded([&] {
        const auto s = flowcast::field_stats(*unwrap(field));
        if (mean) *mean = s.mean;
        if (min) *min = s.min;
        if (max) *max = s.max;
        if (std_dev) *std_dev = s.std_dev;
        return FC_OK;
    });
}

fc_status fc_field_convert_units(const fc_field* field, const char* unit, fc_field** out) {
    if (!field || !unit || !out) return invalid_argument("fc_field_convert_units: null argument");
    return guarded([&] {
        auto converted =
            std::make_unique<flowcast::ScalarField>(flowcast::convert_units(*unwrap(field), unit));
        *out = wrap(converted.release());
        return FC_OK;
    });
}

void fc_field_destroy(fc_field* field) { delete unwrap(field); }

fc_status fc_divergence(const fc_field* u, const fc_field* v, fc_field** out) {
    if (!u || !v || !out) return invalid_argument("fc_divergence: null argument");
    return guarded([&] {
        flowcast::VectorField vel(*unwrap(u), *unwrap(v));
        auto div = std::make_unique<flowcast::ScalarField>(flowcast::divergence(vel));
        *out = wrap(div.release());
        return FC_OK;
    });
}

fc_status fc_vorticity(const fc_field* u, const fc_field* v, fc_field** out) {
    if (!u || !v || !out) return invalid_argument("fc_vorticity: null argument");
    return guarded([&] {
        flowcast::VectorField vel(*unwrap(u), *unwrap(v));
        auto curl = std::make_unique<flowcast::ScalarField>(flowcast::vorticity(vel));
        *out = wrap(curl.release());
        return FC_OK;
    });
}

fc_status fc_velocity_from_vorticity(const fc_field* vorticity, fc_field** u_out, fc_field** v_out) {
    if (!vorticity || !u_out || !v_out) {
        return invalid_argument("fc_velocity_from_vorticity: null argument");
    }
    return guarded([&] {
        auto vel = flowcast::velocity_from_vorticity(*unwrap(vorticity));
        auto u = std::make_unique<flowcast::ScalarField>(std::move(vel.u));
        auto v = std::make_unique<flowcast::ScalarField>(std::move(vel.v));
        *u_out = wrap(u.release());
        *v_out = wrap(v.release());
        return FC_OK;
    });
}

fc_status fc_store_create(const char* embedder_spec, fc_store** out) {
    if (!embedder_spec || !out) return invalid_argument("fc_store_create: null argument");
    return guarded([&] {
        auto handle = std::make_unique<StoreHandle>();
        handle->embedder = flowcast::make_embedder(embedder_spec);
        *out = reinterpret_cast<fc_store*>(handle.release());
        return FC_OK;
    });
}

fc_status fc_store_ingest_dir(fc_store* store, const char* directory, const char* partition,
                              int* count_out) {
    if (!store || !directory || !partition) {
        return invalid_argument("fc_store_ingest_dir: null argument");
    }
    return guarded([&] {
        auto* handle = unwrap(store);
        const int count = handle->store.ingest_directory(directory, flowcast::parse_partition(partition),
                                                         *handle->embedder);
        if (count_out) *count_out = count;
        return FC_OK;
    });
}

fc_status fc_store_query(const fc_store* store, const char* text, int k, const char* partition,
                         char** ranked_json_out) {
    if (!store || !text || !ranked_json_out) return invalid_argument("fc_store_query: null argument");
    return guarded([&] {
        const auto* handle = unwrap(store);
        std::optional<flowcast::Partition> filter;
        if (partition && std::string(partition) != "all") {
            filter = flowcast::parse_partition(partition);
        }
        auto result = handle->store.query(text, k, *handle->embedder, filter);
        auto arr = nlohmann::ordered_json::array();
        for (const auto& hit : result.ranked) {
            arr.push_back({{"id", hit.id},
                           {"score", hit.score},
                           {"text", handle->store.chunk_by_id(hit.id).text}});
        }
        *ranked_json_out = copy_string(arr.dump());
        return FC_OK;
    });
}

fc_status fc_store_save(const fc_store* store, const char* stem) {
    if (!store || !stem) return invalid_argument("fc_store_save: null argument");
    return guarded([&] {
        unwrap(store)->store.save(stem);
        return FC_OK;
    });
}

fc_status fc_store_load(const char* stem, const char* embedder_spec, fc_store** out) {
    if (!stem || !embedder_spec || !out) return invalid_argument("fc_store_load: null argument");
    return guarded([&] {
        auto handle = std::make_unique<StoreHandle>();
        handle->embedder = flowcast::make_embedder(embedder_spec);
        handle->store = flowcast::KnowledgeStore::load(stem);
        *out = reinterpret_cast<fc_store*>(handle.release());
        return FC_OK;
    });
}

void fc_store_destroy(fc_store* store) { delete unwrap(store); }

fc_status fc_run(const char* command, const char* config_file, const char* const* overrides,
                 size_t n_overrides, const char* out_dir, char** summary_json_out) {
    if (!command) return invalid_argument("fc_run: null command");
    if (n_overrides > 0 && !overrides) return invalid_argument("fc_run: null overrides");
    return guarded([&]() -> fc_status {
        flowcast::RunRequest request;
        request.command = command;
        if (config_file) request.config_file = std::filesystem::path(config_file);
        for (size_t i = 0; i < n_overrides; ++i) {
            if (!overrides[i]) throw flowcast::usage_error("fc_run: null override entry");
            request.overrides.emplace_back(overrides[i]);
        }
        if (out_dir) request.out_dir = std::filesystem::path(out_dir);
        auto outcome = flowcast::run_command(request);
        if (summary_json_out) *summary_json_out = copy_string(outcome.summary.dump(2));
        if (outcome.exit_code == 4) {
            g_last_error = "episode ended in failed status (physics violations exhausted the retry budget)";
            return FC_PHYSICS_FAILURE;
        }
        return FC_OK;
    });
}

}  // extern "C"
