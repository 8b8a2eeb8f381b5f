#include <stdio.h>
#include <string.h>
#include "ringsim.h"

#define CHECK(call)                                                   \
  do {                                                                \
    RingsimStatus st = (call);                                        \
    if (st != RINGSIM_STATUS_OK) {                                    \
      fprintf(stderr, "%s -> %d: %s\n", #call, st, ringsim_last_error()); \
      return 1;                                                       \
    }                                                                 \
  } while (0)

int main(void) {
  const char *toml = "seed = 3\n[cloud]\nn = 20\n[integrator]\nt_end = \"50 ms\"\n"
                     "[probe]\nstart = \"0 s\"\nstop = \"40 ms\"\nstep = \"1 ms\"\n";
  RingsimScenario *s = NULL;
  CHECK(ringsim_scenario_parse(toml, &s));

  char *report = NULL;
  CHECK(ringsim_characterize_json(s, &report));
  if (strstr(report, "gradient_g_per_cm") == NULL) return 2;
  ringsim_string_free(report);

  double p[3] = {0.0, 0.0, 0.0};
  double b[3];
  CHECK(ringsim_field(s, p, 0.0, b));

  RingsimResult *r = NULL;
  CHECK(ringsim_simulate(s, &r));
  size_t n = 0;
  if (ringsim_result_trace(r, NULL, NULL, 0, &n) != RINGSIM_STATUS_BUFFER_TOO_SMALL || n != 41) return 3;
  double t[41], y[41];
  CHECK(ringsim_result_trace(r, t, y, 41, &n));

  RingsimScenario *bad = NULL;
  if (ringsim_scenario_parse("seed = 1\n[ring]\ncurrent = \"8 G\"\n", &bad) != RINGSIM_STATUS_PARSE) return 4;
  if (bad != NULL) return 4;
  if (strlen(ringsim_last_error()) == 0) return 5;

  printf("ok %s %zu\n", ringsim_version(), n);
  ringsim_result_free(r);
  ringsim_scenario_free(s);
  return 0;
}
