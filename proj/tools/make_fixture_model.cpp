// Writes a model bundle with seeded random weights.
//
//   make_fixture_model --topology net16 --channels 2 --seed 1 --out fixtures/models/net16_c2

#include "evframe/nn/manifest.hpp"
#include "evframe/nn/topology.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Generate a random-weight model bundle"};
    std::string topology = "net16";
    int channels = 2;
    int classes = 11;
    std::uint64_t seed = 1;
    std::string out;
    app.add_option("--topology", topology, "net16 | net70 | net16w")->capture_default_str();
    app.add_option("--channels", channels, "input channels")->capture_default_str();
    app.add_option("--classes", classes, "class count")->capture_default_str();
    app.add_option("--seed", seed, "weight seed")->capture_default_str();
    app.add_option("--out", out, "bundle directory")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        auto model = evf::nn::make_topology(evf::nn::parse_topology(topology), channels, classes);
        evf::nn::randomize_weights(model, seed);
        evf::nn::save_model(model, out);
        std::cout << model.name << " params=" << model.param_count() << " -> " << out << "\n";
    } catch (const evf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return static_cast<int>(e.error_class());
    }
    return 0;
}
