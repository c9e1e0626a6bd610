#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "cvqnet/cvqnet.hpp"
#include "test_helpers.hpp"

using namespace cvqnet;
using test_helpers::max_abs_diff;

namespace {

double eq_three_party(double r) {
    return 1.0 / std::sqrt((1.0 + std::exp(-2.0 * r)) *
                           (1.0 + 3.0 / (2.0 * std::exp(2.0 * r) + std::exp(-2.0 * r))));
}

double eq_n_party(int n, double r) {
    return 1.0 / std::sqrt((1.0 + std::exp(-2.0 * r)) *
                           (1.0 + n / (2.0 * std::exp(2.0 * r) + (n - 2) * std::exp(-2.0 * r))));
}

double eq_one_squeezed(int n, double r1) {
    return 1.0 / std::sqrt(2.0 + 2.0 * n / (n - 2 + 2.0 * std::exp(2.0 * r1)));
}

}  // namespace

TEST_CASE("dB conversion uses 10 log10(e^{2r})", "[teleport]") {
    REQUIRE(db_from_r(1.0) == Approx(8.685889638065035).epsilon(1e-12));
    REQUIRE(r_from_db(db_from_r(0.37)) == Approx(0.37).epsilon(1e-14));
    REQUIRE(db_from_r(0.0) == 0.0);
}

TEST_CASE("optimal gain follows the closed forms", "[teleport]") {
    SECTION("no squeezing means no correction") {
        REQUIRE(optimal_gain(5, Scenario::AllEqual, 0.0).value() == 0.0);
        REQUIRE(optimal_gain(5, Scenario::OneSqueezed, 0.0).value() == 0.0);
    }

    SECTION("strong squeezing drives the gain to 1") {
        REQUIRE(optimal_gain(8, Scenario::AllEqual, 12.0).value() == Approx(1.0).margin(1e-6));
        REQUIRE(optimal_gain(8, Scenario::OneSqueezed, 12.0).value() ==
                Approx(1.0).margin(1e-6));
    }

    SECTION("e^{4r} = 4 gives 2/3 for three parties") {
        const double r = std::log(4.0) / 4.0;
        REQUIRE(optimal_gain(3, Scenario::AllEqual, r).value() ==
                Approx(2.0 / 3.0).epsilon(1e-14));
    }

    SECTION("two parties have no assisting gain") {
        REQUIRE_FALSE(optimal_gain(2, Scenario::AllEqual, 1.0).has_value());
        REQUIRE_THROWS_AS(optimal_gain(1, Scenario::AllEqual, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(optimal_gain(4, Scenario::Custom, 1.0), std::invalid_argument);
    }
}

TEST_CASE("optimal fidelity evaluates the closed expressions", "[teleport]") {
    SECTION("no squeezing is classical for every N") {
        for (int n : {2, 3, 7, 29, 100}) {
            REQUIRE(optimal_fidelity(n, Scenario::AllEqual, 0.0) == Approx(0.5).margin(1e-14));
            REQUIRE(optimal_fidelity(n, Scenario::OneSqueezed, 0.0) == Approx(0.5).margin(1e-14));
        }
    }

    SECTION("the one-squeezed family is capped at 1/sqrt(2)") {
        for (int n : {2, 3, 5, 10, 100}) {
            for (double r1 = 0.0; r1 <= 6.0; r1 += 0.25) {
                REQUIRE(optimal_fidelity(n, Scenario::OneSqueezed, r1) <=
                        1.0 / std::sqrt(2.0) + 1e-12);
            }
            REQUIRE(optimal_fidelity(n, Scenario::OneSqueezed, 12.0) ==
                    Approx(1.0 / std::sqrt(2.0)).margin(1e-6));
        }
    }

    SECTION("one-squeezed fidelity decreases with N and increases with r1") {
        for (int n : {2, 3, 5, 10}) {
            REQUIRE(optimal_fidelity(n, Scenario::OneSqueezed, 0.8) >
                    optimal_fidelity(n + 1, Scenario::OneSqueezed, 0.8));
            REQUIRE(optimal_fidelity(n, Scenario::OneSqueezed, 0.9) >
                    optimal_fidelity(n, Scenario::OneSqueezed, 0.8));
        }
    }

    SECTION("all-equal families up to N = 29 never drop below 1/2") {
        for (int n : {2, 5, 12, 22, 27, 29}) {
            for (double r = 0.0; r <= 6.0; r += 0.01) {
                const double f = optimal_fidelity(n, Scenario::AllEqual, r);
                REQUIRE(f >= 0.5 - 1e-12);
                REQUIRE(f <= 1.0 + 1e-12);
            }
        }
    }

    SECTION("matches the form-route fidelity with optimal gains") {
        for (int n : {2, 3, 5, 8, 20, 50}) {
            for (const double r : {0.0, 0.2, 0.7, 1.5, 3.0}) {
                for (const Scenario scenario : {Scenario::AllEqual, Scenario::OneSqueezed}) {
                    const NetworkConfig config = scenario == Scenario::AllEqual
                                                     ? NetworkConfig::all_equal(n, r)
                                                     : NetworkConfig::one_squeezed(n, r);
                    REQUIRE(optimal_fidelity(n, scenario, r) ==
                            Approx(closed_form_fidelity(config, 0, 1, optimal_gains(config)))
                                .margin(1e-10));
                }
            }
        }
    }
}

TEST_CASE("run_protocol reproduces the closed-form fidelities", "[teleport]") {
    SECTION("classical teleportation yields exactly 1/2") {
        RngStream rng(5);
        for (const auto alpha : {std::array<double, 2>{0.0, 0.0},
                                 std::array<double, 2>{2.5, -1.0}}) {
            for (int trial = 0; trial < 5; ++trial) {
                RngStream stream = rng.substream(trial);
                const auto outcome = run_protocol(NetworkConfig::all_equal(2, 0.0), 0, 1, alpha,
                                                  GainSchedule{1.0, 0.0, std::nullopt}, &stream);
                REQUIRE(outcome.fidelity == Approx(0.5).margin(1e-12));
            }
        }
    }

    SECTION("three parties at the optimum gain") {
        RngStream rng(7);
        for (const double r : {0.1, 0.25, 0.5, 1.0, 2.0}) {
            const auto config = NetworkConfig::all_equal(3, r);
            RngStream stream = rng.substream(static_cast<std::uint64_t>(r * 100));
            const auto outcome =
                run_protocol(config, 0, 1, {0.3, -0.4}, optimal_gains(config), &stream);
            REQUIRE(outcome.fidelity == Approx(eq_three_party(r)).margin(1e-10));
        }
    }

    SECTION("five parties, one squeezed state") {
        const auto config = NetworkConfig::one_squeezed(5, 2.0);
        RngStream rng(11);
        const auto outcome = run_protocol(config, 0, 3, {0.0, 0.0}, optimal_gains(config), &rng);
        REQUIRE(outcome.fidelity == Approx(eq_one_squeezed(5, 2.0)).margin(1e-10));
    }

    SECTION("general-N closed form") {
        RngStream rng(13);
        for (int n : {2, 4, 8}) {
            for (const double r : {0.2, 0.6, 1.2}) {
                const auto config = NetworkConfig::all_equal(n, r);
                RngStream stream = rng.substream(n * 100 + static_cast<int>(r * 10));
                const auto outcome =
                    run_protocol(config, 0, 1, {1.0, 1.0}, optimal_gains(config), &stream);
                REQUIRE(outcome.fidelity == Approx(eq_n_party(n, r)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("covariance pipeline and form oracle agree on random configurations", "[teleport]") {
    RngStream rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        const auto config = test_helpers::random_config(rng);
        const int n = config.n_modes;
        const int sender = static_cast<int>(rng.next_u64() % n);
        int receiver = static_cast<int>(rng.next_u64() % n);
        if (receiver == sender) receiver = (receiver + 1) % n;

        GainSchedule gains;
        gains.bell = 1.0;
        gains.assist = (trial % 2 == 0 && config.scenario != Scenario::Custom && n >= 3)
                           ? optimal_gain(n, config.scenario, config.r[0]).value()
                           : 1.0;

        RngStream stream = rng.substream(trial);
        const auto outcome = run_protocol(config, sender, receiver, {0.7, -0.2}, gains, &stream);
        const double oracle = closed_form_fidelity(config, sender, receiver, gains);
        REQUIRE(outcome.fidelity == Approx(oracle).margin(1e-10));
        REQUIRE(outcome.output.is_physical());
        REQUIRE(outcome.conditional.is_physical());
    }
}

TEST_CASE("asymmetric station gains agree across both routes", "[teleport]") {
    const auto config = NetworkConfig::custom({1.4, 0.3, 0.0, 0.8, 2.1});
    GainSchedule gains;
    gains.bell = 1.0;
    gains.per_station = std::vector<double>{0.2, 0.9, 0.4};
    RngStream rng(606);
    const auto outcome = run_protocol(config, 1, 4, {0.5, -1.5}, gains, &rng);
    REQUIRE(outcome.fidelity ==
            Approx(closed_form_fidelity(config, 1, 4, gains)).margin(1e-10));

    GainSchedule skewed = gains;
    skewed.bell = 0.85;
    RngStream rng2(607);
    const auto off_gain = run_protocol(config, 1, 4, {0.5, -1.5}, skewed, &rng2);
    REQUIRE(off_gain.fidelity ==
            Approx(closed_form_fidelity(config, 1, 4, skewed, {0.5, -1.5})).margin(1e-10));
}

TEST_CASE("conditioning a pure joint state keeps the teleported mode pure", "[teleport]") {
    const auto config = NetworkConfig::all_equal(5, 1.0);
    RngStream rng(19);
    const auto outcome = run_protocol(config, 0, 4, {0.7, 0.7}, optimal_gains(config), &rng);
    REQUIRE(outcome.conditional.purity() == Approx(1.0).margin(1e-10));
    // The record-averaged output carries the displacement spread on top.
    REQUIRE(outcome.output.purity() < 1.0);
}

TEST_CASE("unit-gain fidelity is outcome independent", "[teleport]") {
    const auto config = NetworkConfig::all_equal(4, 0.8);
    const auto gains = optimal_gains(config);
    RngStream root(55);
    RngStream first = root.substream(0);
    const auto reference = run_protocol(config, 1, 3, {1.1, 0.4}, gains, &first);
    for (int trial = 1; trial < 100; ++trial) {
        RngStream stream = root.substream(trial);
        const auto sample = run_protocol(config, 1, 3, {1.1, 0.4}, gains, &stream);
        REQUIRE(sample.fidelity == reference.fidelity);  // bitwise: no outcome enters
        REQUIRE(max_abs_diff(sample.conditional.cov(), reference.conditional.cov()) == 0.0);
        REQUIRE(max_abs_diff(sample.output.cov(), reference.output.cov()) == 0.0);
    }
}

TEST_CASE("away from unit gain the fidelity depends on alpha and matches the oracle",
          "[teleport]") {
    const auto config = NetworkConfig::all_equal(3, 0.6);
    GainSchedule gains;
    gains.bell = 0.8;
    gains.assist = 0.5;
    RngStream rng(77);
    const std::array<double, 2> near{0.2, 0.1};
    const std::array<double, 2> far{3.0, -2.0};
    RngStream s1 = rng.substream(1), s2 = rng.substream(2);
    const auto small = run_protocol(config, 0, 1, near, gains, &s1);
    const auto large = run_protocol(config, 0, 1, far, gains, &s2);
    REQUIRE(small.fidelity > large.fidelity);
    REQUIRE(small.fidelity == Approx(closed_form_fidelity(config, 0, 1, gains, near)).margin(1e-10));
    REQUIRE(large.fidelity == Approx(closed_form_fidelity(config, 0, 1, gains, far)).margin(1e-10));
}

TEST_CASE("every ordered sender/receiver pair teleports equally well", "[teleport]") {
    const auto config = NetworkConfig::all_equal(4, 1.0);
    const auto gains = optimal_gains(config);
    const double reference = closed_form_fidelity(config, 0, 1, gains);
    RngStream rng(303);
    int pairs = 0;
    for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) {
            if (k == l) continue;
            RngStream stream = rng.substream(4 * k + l);
            const auto outcome = run_protocol(config, k, l, {0.5, 0.5}, gains, &stream);
            REQUIRE(outcome.fidelity == Approx(reference).margin(1e-12));
            REQUIRE(closed_form_fidelity(config, k, l, gains) ==
                    Approx(reference).margin(1e-12));
            ++pairs;
        }
    }
    REQUIRE(pairs == 12);
}

TEST_CASE("protocol bookkeeping", "[teleport]") {
    const auto config = NetworkConfig::all_equal(4, 0.5);
    const auto gains = optimal_gains(config);

    SECTION("forced outcomes feed the record in measurement order") {
        const std::vector<double> forced{0.5, -0.25, 0.75, -1.5};
        const auto outcome = run_protocol(config, 0, 2, {0.0, 0.0}, gains, nullptr, &forced);
        REQUIRE(outcome.record.x_u == 0.5);
        REQUIRE(outcome.record.p_v == -0.25);
        REQUIRE(outcome.record.assist_modes == std::vector<int>{1, 3});
        REQUIRE(outcome.record.assist_p == std::vector<double>{0.75, -1.5});
        REQUIRE_FALSE(outcome.degenerate);
    }

    SECTION("identical seeds give identical records") {
        RngStream s1(42), s2(42);
        const auto a = run_protocol(config, 0, 1, {0.0, 0.0}, gains, &s1);
        const auto b = run_protocol(config, 0, 1, {0.0, 0.0}, gains, &s2);
        REQUIRE(a.record.x_u == b.record.x_u);
        REQUIRE(a.record.p_v == b.record.p_v);
        REQUIRE(a.record.assist_p == b.record.assist_p);
        REQUIRE(a.conditional.mean() == b.conditional.mean());
    }

    SECTION("preconditions throw") {
        RngStream rng(1);
        REQUIRE_THROWS_AS(run_protocol(config, 1, 1, {0.0, 0.0}, gains, &rng),
                          std::invalid_argument);
        const std::vector<double> short_forced{0.0, 0.0};
        REQUIRE_THROWS_AS(run_protocol(config, 0, 1, {0.0, 0.0}, gains, nullptr, &short_forced),
                          std::invalid_argument);
        GainSchedule bad = gains;
        bad.per_station = std::vector<double>{0.1};
        REQUIRE_THROWS_AS(run_protocol(config, 0, 1, {0.0, 0.0}, bad, &rng),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(run_protocol(config, 0, 1, {0.0, 0.0}, gains),
                          std::invalid_argument);
    }

    SECTION("per-station gains equal to the shared gain change nothing") {
        GainSchedule listed = gains;
        listed.per_station = std::vector<double>(2, gains.assist);
        const std::vector<double> forced{0.1, 0.2, 0.3, 0.4};
        const auto a = run_protocol(config, 0, 1, {0.0, 0.0}, gains, nullptr, &forced);
        const auto b = run_protocol(config, 0, 1, {0.0, 0.0}, listed, nullptr, &forced);
        REQUIRE(a.fidelity == b.fidelity);
        REQUIRE(a.conditional.mean() == b.conditional.mean());
    }
}

TEST_CASE("numeric gain search recovers the closed forms", "[teleport]") {
    SECTION("single shared gain") {
        const auto config = NetworkConfig::all_equal(3, 0.5);
        const auto result = optimize_gains_numeric(config, GainMode::Single);
        REQUIRE(result.converged);
        REQUIRE(result.gains.size() == 1);
        REQUIRE(result.gains[0] ==
                Approx(optimal_gain(3, Scenario::AllEqual, 0.5).value()).margin(1e-6));
        REQUIRE(result.fidelity == Approx(optimal_fidelity(3, Scenario::AllEqual, 0.5))
                                       .margin(1e-10));
    }

    SECTION("no squeezing pins the gain at zero") {
        const auto config = NetworkConfig::all_equal(4, 0.0);
        const auto result = optimize_gains_numeric(config, GainMode::Single);
        REQUIRE(std::abs(result.gains[0]) < 1e-6);
        REQUIRE(result.fidelity == Approx(0.5).margin(1e-10));
    }

    SECTION("per-station search stays symmetric and cannot beat the shared optimum") {
        const auto config = NetworkConfig::one_squeezed(6, 1.0);
        const auto result = optimize_gains_numeric(config, GainMode::PerStation);
        REQUIRE(result.gains.size() == 4);
        const double g_formula = optimal_gain(6, Scenario::OneSqueezed, 1.0).value();
        for (double g : result.gains) REQUIRE(g == Approx(g_formula).margin(1e-4));
        const double spread =
            *std::max_element(result.gains.begin(), result.gains.end()) -
            *std::min_element(result.gains.begin(), result.gains.end());
        REQUIRE(spread < 1e-4);
        const double symmetric = optimal_fidelity(6, Scenario::OneSqueezed, 1.0);
        REQUIRE(result.fidelity <= symmetric + 1e-8);
        REQUIRE(result.fidelity >= symmetric - 1e-8);
    }

    SECTION("two parties cannot be optimized") {
        REQUIRE_THROWS_AS(optimize_gains_numeric(NetworkConfig::all_equal(2, 1.0),
                                                 GainMode::Single),
                          std::invalid_argument);
    }
}

TEST_CASE("fidelity curves carry the figure shapes", "[teleport]") {
    const std::vector<int> ns{2, 3, 4, 8};
    const DbGrid grid{0.0, 12.0, 1.0};

    SECTION("all curves start at the classical value") {
        for (const Scenario scenario : {Scenario::AllEqual, Scenario::OneSqueezed}) {
            const auto rows = fidelity_curve(ns, scenario, grid);
            for (const auto& row : rows) {
                if (row.squeezing_db == 0.0) REQUIRE(row.fidelity == Approx(0.5).margin(1e-12));
            }
        }
    }

    SECTION("small all-equal networks improve monotonically with squeezing") {
        const auto rows = fidelity_curve(ns, Scenario::AllEqual, grid);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].n == rows[i - 1].n) {
                REQUIRE(rows[i].fidelity > rows[i - 1].fidelity - 1e-12);
            }
        }
    }

    SECTION("one-squeezed curves never exceed 1/sqrt(2)") {
        const auto rows = fidelity_curve({2, 3, 4, 8, 20, 50}, Scenario::OneSqueezed, grid);
        for (const auto& row : rows) {
            REQUIRE(row.fidelity <= 1.0 / std::sqrt(2.0) + 1e-12);
        }
    }

    SECTION("N = 50 all-equal dips below 1/2 and recovers at high squeezing") {
        const auto rows = fidelity_curve({50}, Scenario::AllEqual, {0.0, 20.0, 0.25});
        double min_f = 1.0, last = 0.0;
        for (const auto& row : rows) {
            min_f = std::min(min_f, row.fidelity);
            last = row.fidelity;
        }
        REQUIRE(min_f < 0.5);
        REQUIRE(last > 0.85);
    }

    SECTION("rows are sorted by (N, dB) with the assisting gain attached") {
        const auto rows = fidelity_curve({8, 2}, Scenario::AllEqual, {0.0, 1.0, 0.5});
        REQUIRE(rows.size() == 6);
        REQUIRE(rows.front().n == 2);
        REQUIRE(rows.back().n == 8);
        for (const auto& row : rows) {
            if (row.n == 2) REQUIRE(row.gain == 0.0);
            if (row.n == 8 && row.squeezing_db > 0.0) REQUIRE(row.gain > 0.0);
            REQUIRE(row.r == Approx(r_from_db(row.squeezing_db)).margin(1e-15));
        }
    }

    SECTION("bad grids and scenarios are rejected") {
        REQUIRE_THROWS_AS(fidelity_curve({}, Scenario::AllEqual, grid), std::invalid_argument);
        REQUIRE_THROWS_AS(fidelity_curve({2}, Scenario::AllEqual, {5.0, 1.0, 0.5}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(fidelity_curve({2}, Scenario::AllEqual, {0.0, 1.0, 0.0}),
                          std::invalid_argument);
        REQUIRE_THROWS_AS(fidelity_curve({1}, Scenario::AllEqual, grid), std::invalid_argument);
        REQUIRE_THROWS_AS(fidelity_curve({2}, Scenario::Custom, grid), std::invalid_argument);
    }
}

TEST_CASE("threshold scan classifies the classical window", "[teleport]") {
    const auto reports = threshold_scan(std::vector<int>{2, 27, 29, 30});

    REQUIRE(reports[0].n == 2);
    REQUIRE(reports[0].classification == ThresholdClass::AlwaysQuantum);
    REQUIRE(reports[0].stationary_points.empty());

    const auto& n27 = reports[1];
    REQUIRE(n27.classification == ThresholdClass::AlwaysQuantum);
    REQUIRE(n27.stationary_points.size() == 2);
    REQUIRE(n27.stationary_points[0].is_max);
    REQUIRE_FALSE(n27.stationary_points[1].is_max);
    REQUIRE(n27.stationary_points[0].r < n27.stationary_points[1].r);
    REQUIRE(n27.stationary_points[0].fidelity > 0.5);
    REQUIRE(n27.stationary_points[1].fidelity > 0.5);

    REQUIRE(reports[2].classification == ThresholdClass::AlwaysQuantum);
    REQUIRE(reports[3].classification == ThresholdClass::DipsClassical);
    REQUIRE(reports[3].min_fidelity < 0.5);

    const auto ranged = threshold_scan(29, 30);
    REQUIRE(ranged.size() == 2);
    REQUIRE(ranged[0].classification == ThresholdClass::AlwaysQuantum);
    REQUIRE(ranged[1].classification == ThresholdClass::DipsClassical);

    REQUIRE_THROWS_AS(threshold_scan(std::vector<int>{}), std::invalid_argument);
    REQUIRE_THROWS_AS(threshold_scan(std::vector<int>{2}, RGrid{0.5, 0.0}),
                      std::invalid_argument);
}
