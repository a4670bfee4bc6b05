// Builds a small synthetic corpus, scores one configuration, then prints the full grid.

#include "vitriever/vitriever.hpp"

#include <iostream>
#include <random>

int main() {
    using namespace vitriever;
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 0.2);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);

    const std::size_t groups = 50, dim = 64;
    std::vector<std::vector<float>> rows;
    std::vector<std::string> ids;
    for (std::size_t g = 0; g < groups; ++g) {
        std::vector<float> center(dim);
        for (auto& v : center) v = static_cast<float>(coord(rng));
        for (int i = 0; i < 4; ++i) {
            auto row = center;
            for (auto& v : row) v += static_cast<float>(noise(rng));
            rows.push_back(row);
            ids.push_back("ukbench" + std::to_string(ids.size()));
        }
    }
    DescriptorSet index(DescriptorMatrix::from_rows(rows, dim), ids);
    GroundTruth gt = parse_ukbench(ids);

    EvaluateOptions options;
    options.metric = Metric::Cosine;
    options.normalization.scheme = Scheme::L2Axis1;
    auto result = evaluate(index, nullptr, gt, options);
    std::cout << "N-S with L2 Axis=1 + cosine: " << result.report.aggregate << "\n\n";

    GridSpec spec;
    spec.label = "synthetic";
    write_grid_table(std::cout, run_grid(index, nullptr, gt, spec, EvaluateOptions{}));
    return 0;
}
