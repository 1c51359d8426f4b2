#include <gtest/gtest.h>

#include <stdexcept>
#include <vector>

#include "pooltest/parallel.hpp"
#include "pooltest/random.hpp"

using pooltest::Rng;
using pooltest::max_threads;
using pooltest::parallel_for;
using pooltest::set_max_threads;

TEST(Rng, SameSeedSameStream) {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) EXPECT_EQ(a.next(), b.next());
}

TEST(Rng, UniformRanges) {
    Rng r(7);
    for (int i = 0; i < 100000; ++i) {
        const double u = r.uniform();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
        const double v = r.uniform_open();
        EXPECT_GT(v, 0.0);
        EXPECT_LT(v, 1.0);
    }
}

TEST(Rng, SplitIgnoresParentConsumption) {
    Rng a(99);
    const Rng fresh(99);
    for (int i = 0; i < 10; ++i) a.next();
    Rng c1 = a.split(3), c2 = fresh.split(3);
    EXPECT_EQ(c1.next(), c2.next());
    EXPECT_NE(fresh.split(3).next(), fresh.split(4).next());
}

TEST(Parallel, EveryIndexOnceAndThreadCountIndependent) {
    const unsigned saved = max_threads();
    for (unsigned threads : {1u, 3u, 8u}) {
        set_max_threads(threads);
        std::vector<int> hits(1000, 0);
        std::vector<std::uint64_t> out(1000);
        parallel_for(hits.size(), [&](std::size_t i) {
            ++hits[i];
            out[i] = Rng(5).split(i).next();
        });
        for (std::size_t i = 0; i < hits.size(); ++i) {
            EXPECT_EQ(hits[i], 1);
            EXPECT_EQ(out[i], Rng(5).split(i).next());
        }
    }
    set_max_threads(saved);
}

TEST(Parallel, NestedCallsAndExceptions) {
    std::vector<int> sums(6, 0);
    parallel_for(6, [&](std::size_t i) {
        parallel_for(4, [&](std::size_t j) { sums[i] += static_cast<int>(j); });
    });
    for (int s : sums) EXPECT_EQ(s, 6);
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
                     if (i == 7) throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}
