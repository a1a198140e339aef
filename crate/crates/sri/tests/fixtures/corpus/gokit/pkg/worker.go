package pkg

import "context"

type Job func(ctx context.Context) error

func RunAll(ctx context.Context, jobs []Job, workers int) []error {
	errs := make([]error, len(jobs))
	idx := make(chan int)
	done := make(chan struct{})
	for w := 0; w < workers; w++ {
		go func() {
			for i := range idx {
				errs[i] = jobs[i](ctx)
			}
			done <- struct{}{}
		}()
	}
	for i := range jobs {
		select {
		case idx <- i:
		case <-ctx.Done():
			errs[i] = ctx.Err()
		}
	}
	close(idx)
	for w := 0; w < workers; w++ {
		<-done
	}
	return errs
}
