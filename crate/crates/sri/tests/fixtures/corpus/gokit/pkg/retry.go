package pkg

import (
	"errors"
	"time"
)

var ErrGiveUp = errors.New("retry: attempts exhausted")

func Retry(attempts int, base time.Duration, fn func() error) error {
	delay := base
	for i := 0; i < attempts; i++ {
		if err := fn(); err == nil {
			return nil
		}
		if i < attempts-1 {
			time.Sleep(delay)
			delay *= 2
		}
	}
	return ErrGiveUp
}
