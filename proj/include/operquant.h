/* C interface to the operquant shared library.
 *
 * Error model: every function returns 0 on success, 1 on an internal error,
 * 2 on an invalid argument or manifest schema violation, and 3 on a
 * numerical failure. On a nonzero return, oq_last_error() holds a
 * thread-local message describing the failure.
 *
 * Complex numbers cross the boundary as double[2] = {re, im}.
 */
#ifndef OPERQUANT_H
#define OPERQUANT_H

#ifdef __cplusplus
extern "C" {
#endif

const char* oq_version(void);

/* Message for the most recent failing call on this thread; empty string if
 * the last call succeeded. The pointer stays valid until the next call. */
const char* oq_last_error(void);

/* Executes a manifest command ("monodromy", "fn", "solve", "yang",
 * "semiclassical", "sov-check"). options_json may be NULL or a JSON object
 * with any of: "tol" (number), "threads" (int), "seed" (int), "cache"
 * (path), "emit_csv" (file prefix). *record receives the result record as a
 * single JSON line, allocated by the library; release it with oq_free. A
 * record is produced for failures too (with an "error" field) whenever
 * possible. */
int oq_run(const char* command, const char* manifest_json, const char* options_json,
           char** record);

void oq_free(char* p);

/* Upsilon(x) = integral from 1/2 to x of log(Gamma(u)/Gamma(1-u)) du. */
int oq_upsilon(const double x[2], double out[2]);

/* Pants vertex function N(l1, l2, l3); l3 is the unsigned leg. */
int oq_pants_n(const double l1[2], const double l2[2], const double l3[2],
               double out[2]);

/* Quartic surface residual of seven trace functions packed as
 * L1,L2,L3,L4,Ls,Lt,Lu (each [re,im]); out receives |LHS - RHS|. */
int oq_quartic_residual(const double traces[14], double* out);

/* Forward Fenchel-Nielsen map: boundary holds L1..L4 (each [re,im]);
 * out receives Ls,Lt,Lu (each [re,im]). */
int oq_fn_to_traces(const double lambda[2], const double kappa[2], int nu,
                    const double boundary[8], double out[6]);

/* Inverse map on the principal branch; traces packed as in
 * oq_quartic_residual; out receives lambda,kappa (each [re,im]). */
int oq_traces_to_fn(const double traces[14], int nu, double out[4]);

#ifdef __cplusplus
}
#endif

#endif /* OPERQUANT_H */
