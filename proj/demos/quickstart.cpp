// Fit the bundled example data and test the planted columns.
//
//   quickstart [X.csv y.csv]

#include "moce/moce.hpp"

#include <cstdio>
#include <iostream>

int main(int argc, char** argv)
{
    const std::string xs = argc > 2 ? argv[1] : "data/example_X.csv";
    const std::string ys = argc > 2 ? argv[2] : "data/example_y.csv";
    try {
        const auto x = moce::io::read_numeric_csv(xs, false).values;
        const auto y = moce::io::as_response(moce::io::read_numeric_csv(ys, false), ys);
        const auto data = moce::standardize(x, y, moce::ColumnScaling::unit_variance);

        moce::PipelineOptions opt;
        opt.seed = 1;
        const auto fit = moce::run_pipeline(data, opt);
        const auto ci = moce::confidence_intervals(fit.moce, 0.95);

        std::printf("lambda %.4f, %ld active, %ld in the expanded model\n", fit.lasso.lambda,
                    static_cast<long>(fit.lasso.active_set.size()), static_cast<long>(fit.expanded.a_tilde));
        moce::IndexSet flagged;
        for (moce::Index j = 0; j < data.p(); ++j) {
            if (ci.lower(j) <= 0.0 && ci.upper(j) >= 0.0) continue;
            flagged.push_back(j);
            std::printf("column %3ld  %+.3f  [%+.3f, %+.3f]\n", static_cast<long>(data.kept[static_cast<std::size_t>(j)] + 1),
                        ci.estimate(j), ci.lower(j), ci.upper(j));
        }
        if (!flagged.empty()) {
            const auto t = moce::wald_wbs(fit.moce, flagged);
            std::printf("Wbs over those %zu columns: %.2f, p = %.3g\n", flagged.size(), t.statistic, t.p_value);
        }
    } catch (const std::exception& e) {
        std::cerr << "quickstart: " << e.what() << "\n";
        return 1;
    }
}
