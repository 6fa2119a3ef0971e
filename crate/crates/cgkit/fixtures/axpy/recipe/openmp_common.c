/* OpenMP pieces shared by both OpenMP variants */
//_connector:include
#include <omp.h>
//_connector:variables
int n_threads = 0;
double t_elapsed = 0.0;
//_connector:setup
#pragma omp parallel
{
  #pragma omp single
  n_threads = omp_get_num_threads();
}
//_connector:execute
printf("threads %d, elapsed %g s\n", n_threads, t_elapsed);
