#include "field_io.hpp"

#include <fstream>

#include "json.hpp"

namespace flowcast {

namespace {

using nlohmann::ordered_json;

void write_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw runtime_error("cannot open '" + path.string() + "' for writing");
    out << text;
}

}  // namespace

void save_field(const ScalarField& f, const std::filesystem::path& stem, double time) {
    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ofstream out(bin, std::ios::binary);
    if (!out) throw runtime_error("cannot open '" + bin.string() + "' for writing");
    // Little-endian host assumed (x86/aarch64); values are IEEE float64.
    out.write(reinterpret_cast<const char*>(f.values().data()),
              static_cast<std::streamsize>(f.values().size() * sizeof(double)));
    if (!out) throw runtime_error("short write to '" + bin.string() + "'");

    ordered_json header = {
        {"H", f.grid().height},   {"W", f.grid().width},          {"variable", f.variable()},
        {"unit", f.unit()},       {"Lx", f.grid().length_x},      {"Ly", f.grid().length_y},
        {"t", time},
    };
    std::filesystem::path json_path = stem;
    json_path += ".json";
    write_file(json_path, header.dump(2) + "\n");
}

ScalarField load_field(const std::filesystem::path& stem, double* time_out) {
    std::filesystem::path json_path = stem;
    json_path += ".json";
    std::ifstream jin(json_path);
    if (!jin) throw runtime_error("cannot open field header '" + json_path.string() + "'");
    ordered_json header = ordered_json::parse(jin, nullptr, true);

    GridSpec grid(header.at("H").get<int>(), header.at("W").get<int>(),
                  header.value("Lx", 2.0 * M_PI), header.value("Ly", 2.0 * M_PI));
    if (time_out) *time_out = header.value("t", 0.0);

    std::filesystem::path bin = stem;
    bin += ".bin";
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw runtime_error("cannot open field data '" + bin.string() + "'");
    std::vector<double> values(static_cast<size_t>(grid.cells()));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (in.gcount() != static_cast<std::streamsize>(values.size() * sizeof(double))) {
        throw runtime_error("field data '" + bin.string() + "' is truncated");
    }
    return ScalarField(grid, header.at("variable").get<std::string>(), header.at("unit").get<std::string>(),
                       std::move(values));
}

void export_csv(const ScalarField& f, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw runtime_error("cannot open '" + path.string() + "' for writing");
    out.precision(17);
    for (int i = 0; i < f.grid().height; ++i) {
        for (int j = 0; j < f.grid().width; ++j) {
            if (j) out << ',';
            out << f.at(i, j);
        }
        out << '\n';
    }
}

void save_state(const FlowState& state, const std::filesystem::path& stem) {
    for (const auto& f : state.channels()) {
        std::filesystem::path p = stem;
        p += "_" + f.variable();
        save_field(f, p, state.time());
    }
}

FlowState load_state(const std::filesystem::path& stem, const std::vector<std::string>& variables) {
    FlowState state;
    for (const auto& var : variables) {
        std::filesystem::path p = stem;
        p += "_" + var;
        double t = 0.0;
        state.add_channel(load_field(p, &t));
        state.set_time(t);
    }
    return state;
}

}  // namespace flowcast
