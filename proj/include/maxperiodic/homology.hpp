#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>
#include <vector>

#include "maxperiodic/curve.hpp"

namespace maxperiodic::homology {

using curve::ContourPath;
using curve::RealHyperellipticCurve;

struct Crossing {
    int slit;
    double x;
    curve::Sheet from;  // sheet before the crossing
};

struct Cycle {
    std::string name;
    ContourPath path;
    std::vector<Crossing> crossings;
    int slit = -1;  // for a-cycles, the slit they encircle
};

struct HomologyBasis {
    std::vector<Cycle> a;  // a_1..a_n
    std::vector<Cycle> b;  // b_1..b_n
    Cycle a0;              // loop around slit 0
};

struct BasisOptions {
    double loop_rho = 0.08;  // Joukowski radius (log scale) of a-cycle loops
    double bulge = 1.0;      // vertical stretch of b-cycle arcs
};

// Loop around slit i at Joukowski radius rho, counterclockwise, starting on the right end.
Cycle slit_loop(const RealHyperellipticCurve& c, int i, double rho, curve::Sheet s = curve::Sheet::plus);
Cycle b_cycle(const RealHyperellipticCurve& c, int j, double bulge = 1.0);
HomologyBasis build_basis(const RealHyperellipticCurve& c, const BasisOptions& opt = {});

// Signed intersection number of two closed cycles from polyline crossings on each sheet.
int intersection_number(const RealHyperellipticCurve& c, const Cycle& x, const Cycle& y);

struct PeriodData {
    int n = 0;
    Eigen::MatrixXcd raw_a;  // raw_a(j,k) = a-period over a_{j+1} of z^k dz/w
    Eigen::MatrixXcd raw_b;
    Eigen::MatrixXcd C;      // eta_j = sum_k C(j,k) z^k dz/w
    Eigen::MatrixXcd Pi;     // Pi(j,k) = integral over b_{j+1} of eta_k
    Eigen::MatrixXcd eta_a;  // a-periods of eta recomputed on loops (certificate)
    double quad_error = 0;

    Eigen::VectorXcd eta(cplx z, cplx w) const;
    curve::DifferentialForm eta_form(int j) const;
    // Coefficients of the polynomial P with eta_j = P(z) dz / w.
    Eigen::VectorXcd eta_poly(int j) const { return C.row(j).transpose(); }
};

PeriodData dual_basis_and_periods(const RealHyperellipticCurve& c, const HomologyBasis& basis,
                                  const quad::Options& opt = {1e-12, 20, 40});

// Rows: eta_j; columns: a-periods then b-periods, each as re,im.  RFC-4180 with CRLF; a non-empty
// provenance string becomes a leading config_hash column.
void write_periods_csv(std::ostream& os, const PeriodData& pd, const std::string& provenance = "");

}  // namespace maxperiodic::homology
