#pragma once

// Hand-written geometry of the worked two-material examples, kept separate
// from the library's built-in scenarios so tests compare two independent
// transcriptions.

#include "mmt/chains.hpp"

#include <cmath>

namespace mmt::testing {

inline const double kS3 = std::sqrt(3.0);

inline Vec v2(double a, double b) { return make_vec({a, b}); }

// material bundles
inline Vec th1() { return v2(1, 1); }
inline Vec th2() { return v2(1, 0); }
inline Vec th3() { return v2(0, 1); }
inline Vec th4() { return v2(-1, 1); }

// unit directions
inline Vec dir1() { return v2(1, 0); }
inline Vec dir2() { return v2(0.5, kS3 / 2); }
inline Vec dir3() { return v2(0.5, -kS3 / 2); }

/// Terminals of the two-sources example: minus points p₋ᵢ and their mirrors p₊ᵢ = −p₋ᵢ.
struct TwoSources {
  Vec pm1 = dir1(), pm2 = dir1() + dir2(), pm3 = dir1() + dir3();
  Vec pp1 = -pm1, pp2 = -pm2, pp3 = -pm3;

  PointChain0 boundary_first() const {
    PointChain0 f(2, 2);
    f.add(pm2, th2());
    f.add(pp2, -th2());
    f.add(pm3, th3());
    f.add(pp3, -th3());
    return f;
  }
  PointChain0 boundary_crossed() const {
    PointChain0 f(2, 2);
    f.add(pm2, th2());
    f.add(pp3, -th2());
    f.add(pm3, th3());
    f.add(pp2, -th3());
    return f;
  }
  PolyChain1 network_first() const {
    PolyChain1 F(2, 2);
    F.add(pp1, pm1, th1());
    F.add(pp2, pp1, th2());
    F.add(pm1, pm2, th2());
    F.add(pp3, pp1, th3());
    F.add(pm1, pm3, th3());
    return F;
  }
  PolyChain1 network_crossed_F() const {
    PolyChain1 F(2, 2);
    F.add(pp1, pm1, th1());
    F.add(pp3, pp1, th2());
    F.add(pm1, pm2, th2());
    F.add(pp2, pp1, th3());
    F.add(pm1, pm3, th3());
    return F;
  }
  PolyChain1 network_crossed_G() const {
    PolyChain1 G(2, 2);
    G.add(pp3, pm2, th2());
    G.add(pp2, pm3, th3());
    return G;
  }
};

/// Terminals and optimizer of the example with a transport cycle.
struct CycleExample {
  Vec pp1 = v2(0, 1), pm1 = v2(0, -1), pp2 = v2(-1, 0), pm2 = v2(1, 0);
  Vec q3 = v2(-1 / kS3, 0), q4 = v2(1 / kS3, 0);

  PointChain0 boundary() const {
    PointChain0 f(2, 2);
    f.add(pm1, th4());
    f.add(pp1, -th4());
    f.add(pm2, th1());
    f.add(pp2, -th1());
    return f;
  }
  PolyChain1 network() const {
    PolyChain1 F(2, 2);
    F.add(pp2, q3, th1());
    F.add(q4, pm2, th1());
    F.add(q3, pp1, th2());
    F.add(pm1, q4, th2());
    F.add(q3, pm1, th3());
    F.add(pp1, q4, th3());
    return F;
  }
};

/// The constant field ½[[1,√3],[1,−√3]] calibrating both examples.
inline Mat phi_bar() { return 0.5 * make_mat({{1, kS3}, {1, -kS3}}); }

}  // namespace mmt::testing
