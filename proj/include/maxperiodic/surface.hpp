#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "maxperiodic/weierstrass.hpp"

namespace maxperiodic::surface {

using curve::CurvePoint;
using domain::MinkowskiVector;
using weierstrass::Tracker;
using weierstrass::TrackState;
using weierstrass::WeierstrassData;

// Difference reduced to [-1/2, 1/2).
double wrap_diff(double d);
// Value reduced to [0, 1).
double wrap01(double x);

struct MeshSpec {
    double h = 1.0 / 40;         // grid spacing in x1 and x2 (1/h must be an integer)
    double x2_margin = 0.6;      // window margin beyond the extreme singular points
    double cone_exclusion = 0.2; // radius of the disks around the q_j left out of the PDE and gradient checks
    int ring_angles = 48;        // angular resolution of the scatter rings
    double track_tol = 1e-11;
    int threads = 0;             // 0: hardware concurrency
};

struct Vertex {
    CurvePoint p;
    MinkowskiVector X;       // x1 stored in [0,1)
    cplx g = 0;
    double metric = 0;       // (1/|g| - |g|)^2 |phi3|^2 / 4
    MinkowskiVector normal;  // stereographic image of g
    double normal_defect = 0;
    bool singular = false;   // lies on a slit image (|g| = 1)
    bool valid = false;
};

// Regular (x1 mod 1, x2) grid carrying the graph x3 = u(x1, x2).
struct MaximalGraphMesh {
    int nx = 0, ny = 0;
    double h = 0, x2lo = 0;
    std::vector<Vertex> vertices;  // row-major: index j * nx + i, node (i h, x2lo + j h)
    std::vector<std::array<int, 3>> faces;
    int holes = 0;                 // nodes where the inversion failed
    int singular = 0;              // nodes on a singular point
    int scatter_nodes = 0;
    double max_normal_defect = 0;
    double recheck_defect = 0;     // max disagreement with an independent path on a vertex subset
    double graph_defect = 0;       // scatter samples against the interpolated graph
    double wrap_jump = 0;          // max unwrapped x1 jump across faces

    const Vertex& at(int i, int j) const { return vertices[j * nx + ((i % nx) + nx) % nx]; }
    double u(int i, int j) const { return at(i, j).X.x3; }
};

struct SlitImage {
    MinkowskiVector q;
    double spread = 0;
};

struct Mark {
    std::vector<MinkowskiVector> q;  // q_0..q_n, x1 in [0,1)
    std::vector<double> spread;
    int eps0 = 1;
};

struct Cycle {
    std::string name;
    MinkowskiVector re;     // Re of the period
    MinkowskiVector flux;   // Im of the period
    domain::Causal causal = domain::Causal::spacelike;
    double closure = 0;     // distance of Re to Z (1,0,0)
};

struct PeriodReport {
    std::vector<Cycle> cycles;  // a_0..a_n then the loop around e
    double closure = 0;         // max over the independent cycles
    double e_translation = 0;   // signed x1 translation around e
    std::vector<double> b_identity;  // |Re of b_j - 2 (q_j - q_0)| (mod the lattice)
};

struct EndRing {
    double radius;
    double residual;  // sup deviation of the height from its limit
    double mean;
};

struct End {
    std::string name;
    MinkowskiVector normal;
    double height = 0;
    std::vector<EndRing> rings;
    bool monotone = false;
};

struct EndData {
    End e1, e2;
    double c = 0;
};

struct ConeRing {
    double r;          // mean horizontal distance from q_j
    double slope;      // mean of |u - u(q_j)| / |x - q_j|
    double spread;     // max - min over directions
    double grad;       // mean |grad u| from the Gauss map
};

struct ConeReport {
    int j;
    std::vector<ConeRing> rings;  // decreasing radii
    bool slope_increasing = false, grad_increasing = false;
};

struct PdeReport {
    double sup = 0, h = 0;
    int nodes = 0;
};

struct SpacelikeReport {
    double max_grad = 0;     // exact, off the cone disks
    double margin = 0;
    double fd_agreement = 0; // finite-difference gradient against the exact one
    int nodes = 0;
};

// Immersion evaluation shared by the mesh, marks and rings.
class Immersion {
public:
    Immersion(const WeierstrassData& W, double tol = 1e-11);
    const WeierstrassData& data() const { return W_; }
    const Tracker& tracker() const { return T_; }
    MinkowskiVector X(const TrackState& s) const;
    TrackState state(const CurvePoint& p) const { return T_.from_base(p); }
    MinkowskiVector at(const CurvePoint& p) const { return X(state(p)); }
    // Samples along a segment at equally spaced parameters (including the end).
    std::vector<TrackState> walk(TrackState s, const curve::Segment& seg, int pieces) const;

private:
    const WeierstrassData& W_;
    Tracker T_;
};

SlitImage slit_image(const Immersion& im, int slit, int samples = 16);
Mark extract_mark(const Immersion& im, int samples = 16);
PeriodReport period_closure(const Immersion& im, const Mark& mark);
EndData end_data(const Immersion& im, int angles = 64);
std::vector<ConeReport> cone_asymptotics(const Immersion& im, const Mark& mark,
                                         const std::vector<double>& radii = {0.1, 0.05, 0.01}, int angles = 48);

MaximalGraphMesh integrate_immersion(const Immersion& im, const Mark& mark, const MeshSpec& spec);
PdeReport pde_residual(const MaximalGraphMesh& m, const Mark& mark, double exclusion);
SpacelikeReport spacelike_check(const MaximalGraphMesh& m, const Mark& mark, double exclusion);

// Finite-difference residual of the maximal surface equation on a periodic-in-x1 grid of heights.
double pde_stencil(const std::function<double(int, int)>& u, int i, int j, double h);

struct S2Point {
    std::vector<double> coords;  // q_0..q_n as (x1 mod 1, x2, x3), then c
    std::vector<cplx> divisor;
    bool ok = false;
    std::string note;
};

struct ModuliParams {
    std::vector<double> branch;
    cplx e = 0;
    int section = 1;
    int eps0 = 1;
    MinkowskiVector q0;
};

// Whole pipeline up to the marks and c (no mesh).
S2Point s2_point(const ModuliParams& p, const std::vector<cplx>& seed = {});

struct S2Jacobian {
    S2Point base;
    Eigen::MatrixXd J;           // rows: coordinates, columns: parameters
    Eigen::VectorXd singular;    // descending
    int rank = 0;
    std::vector<std::string> parameters;
};

// Parameters: c_1..c_{2n+1} (last branch point fixed), Im e, q0.
S2Jacobian s2_jacobian(const ModuliParams& p, double step = 1e-5, double rank_tol = 1e-7);

struct ConvergenceRow {
    int k;
    double delta;
    double sup_error;
    double mark_error;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    bool monotone = false;
    bool marks_converge = false;
};

ConvergenceReport convergence_demo(const ModuliParams& p0, const std::vector<double>& direction, double delta0,
                                   int steps = 5, int window = 12);

// Stereographic normal at a point with the tangent-plane normal from Phi.
MinkowskiVector tangent_normal(const Eigen::Vector3cd& Phi);

namespace catenoid {

struct Spec {
    double c = 1.0;
    double h = 1e-2;
    double half_width = 6.0;
    double exclusion = 4.0;   // disk around the cone point left out of the PDE residual
    int obj_stride = 10;
};

MinkowskiVector X(double c, cplx z);  // closed-form immersion for g = z, phi3 = c dz/z
double profile(double c, double rho); // u = c asinh(rho / c)

struct Report {
    double profile_defect = 0;   // max | rho - c sinh(x3 / c) |
    double pde_sup = 0;
    double gradient_defect = 0;  // FD gradient against the closed form
    double max_grad = 0;
    double slope = 0;            // at r = 1e-2
    double symmetry_defect = 0;  // rotation by 90 degrees
    double planar_residual = 0;  // g = 0 override
    int nodes = 0;
    double seconds = 0;
};

struct Surface {
    int n = 0;  // grid is n x n
    double h = 0, x0 = 0;
    std::vector<cplx> z;  // domain point of each node
    std::vector<MinkowskiVector> X;
};

Surface build(const Spec& s);
Report diagnose(const Spec& s, const Surface& S);

}  // namespace catenoid

}  // namespace maxperiodic::surface
